"""File formats: headerless CSV matrices, result tables and run manifests."""

import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .exceptions import InvalidInputError

FORMAT_VERSION = "1"


def read_matrix(path):
    """Headerless, row-major CSV of finite reals, returned as a 2-d array."""
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as err:
        raise InvalidInputError(f"{path}: {err}") from err
    if not np.all(np.isfinite(data)):
        raise InvalidInputError(f"{path}: non-finite entries")
    return data


def read_vector(path):
    data = read_matrix(path)
    if 1 not in data.shape:
        raise InvalidInputError(f"{path}: expected a single row or column, got shape {data.shape}")
    return data.ravel()


def write_matrix(path, A):
    """Headerless CSV with 17 significant digits so values round-trip exactly."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    np.savetxt(path, A, delimiter=",", fmt="%.17g")


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv_rows(path, columns, rows):
    """Header plus rows; ``path`` may be an open text stream."""
    if hasattr(path, "write"):
        _write_rows(path, columns, rows)
        return
    with open(path, "w", newline="") as fh:
        _write_rows(fh, columns, rows)


def _write_rows(fh, columns, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])


def prepare_out_dir(out_dir, force=False):
    """Create ``out_dir``; refuse to reuse a non-empty one unless ``force``."""
    if os.path.isdir(out_dir) and os.listdir(out_dir) and not force:
        raise FileExistsError(f"{out_dir} is not empty; pass --force to overwrite")
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def write_manifest(out_dir, invocation=None, seed=None, extra=None):
    """manifest.json with version, invocation, seed and timestamp.

    The timestamp is taken from SOURCE_DATE_EPOCH when set and is null
    otherwise, so identical runs produce identical files.
    """
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    manifest = {
        "version": FORMAT_VERSION,
        "package_version": __version__,
        "invocation": list(invocation) if invocation is not None else None,
        "seed": seed,
        "timestamp": int(epoch) if epoch else None,
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def dump_json(obj, fh=None):
    fh = sys.stdout if fh is None else fh
    json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
    fh.write("\n")
