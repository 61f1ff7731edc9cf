"""Design-matrix condition checks: eigenvalue condition, irrepresentable
condition, column-norm regularity, the noise event and the error radius."""

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core import check_support
from .exceptions import DegeneratePartitionError, InvalidInputError, SingularBlockError

SYMMETRY_TOL = 1e-10
SINGULAR_TOL = 1e-12


def min_eigenvalue_symmetric(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {M.shape}")
    if np.max(np.abs(M - M.T), initial=0.0) > SYMMETRY_TOL:
        raise InvalidInputError("matrix is not symmetric")
    return float(np.linalg.eigvalsh(M)[0])


@dataclass
class ConditionReport:
    ec_max_cross: float
    ec_lambda_min: float
    ec_margin: float
    ec_holds: bool
    ec_strengthened_holds: bool
    ic_values: Optional[np.ndarray] = None
    ic_max: Optional[float] = None
    ic_holds: Optional[bool] = None
    ic_eta: float = 0.0
    c1_max_diag: Optional[float] = None
    c1_holds: Optional[bool] = None

    @property
    def ic_fails_for_all_eta(self):
        # |.| <= 1 - eta is violated for every eta > 0 exactly when the max reaches 1
        return None if self.ic_max is None else bool(self.ic_max >= 1.0)

    def to_dict(self):
        d = asdict(self)
        d.pop("ic_values")
        for k, v in d.items():
            if isinstance(v, np.generic):
                d[k] = v.item()
        return d


def _blocks(X, S):
    """C11 and C12 of the Gram partition, computed from the support rows only."""
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    S = check_support(S, p)
    if S.size == 0 or S.size == p:
        raise DegeneratePartitionError(f"support of size {S.size} leaves an empty block for p={p}")
    rest = np.setdiff1d(np.arange(p), S)
    XS = X[:, S]
    C11 = XS.T @ XS / X.shape[0]
    C11 = np.triu(C11) + np.triu(C11, 1).T
    C12 = XS.T @ X[:, rest] / X.shape[0]
    lam_min = min_eigenvalue_symmetric(C11)
    if lam_min <= SINGULAR_TOL:
        raise SingularBlockError(f"smallest eigenvalue of C11 is {lam_min:.3g}")
    return C11, C12, lam_min


def eigenvalue_condition(X, S):
    """Cross inner products between support and off-support columns versus
    the smallest eigenvalue of the support block.

    Returns ``(max_cross, lambda_min, margin, holds, strengthened_holds)``.
    ``holds`` is the literal reading (some delta in (0, 1) exists, i.e.
    max_cross < lambda_min); the strengthened verdict multiplies max_cross by
    sqrt(q). Cross products enter in absolute value.
    """
    C11, C12, lam_min = _blocks(X, S)
    max_cross = float(np.max(np.abs(C12)))
    q = C11.shape[0]
    margin = 1.0 - max_cross / lam_min
    holds = bool(max_cross < lam_min)
    strengthened = bool(np.sqrt(q) * max_cross < lam_min)
    return max_cross, lam_min, margin, holds, strengthened


def irrepresentable_condition(X, S, signs=None, eta=0.0):
    """Elementwise |C21 C11^{-1} signs| over off-support columns.

    Returns ``(values, max, holds)`` where ``holds`` means max <= 1 - eta.
    ``values`` follow the original order of the off-support columns.
    """
    if not 0 <= eta < 1:
        raise InvalidInputError("eta must lie in [0, 1)")
    C11, C12, _ = _blocks(X, S)
    q = C11.shape[0]
    signs = np.ones(q) if signs is None else np.asarray(signs, dtype=float).ravel()
    if signs.shape[0] != q or not np.all(np.isin(signs, (-1.0, 1.0))):
        raise InvalidInputError(f"signs must be {q} entries from {{-1, +1}}")
    values = np.abs(C12.T @ np.linalg.solve(C11, signs))
    vmax = float(values.max())
    return values, vmax, bool(vmax <= 1.0 - eta)


def check_c1(X, sigma=1.0):
    """Max of X_j'X_j / n and whether it stays below 1/sigma^2."""
    if not sigma > 0:
        raise InvalidInputError("sigma must be positive")
    X = np.asarray(X, dtype=float)
    max_diag = float(np.max(np.einsum("ij,ij->j", X, X)) / X.shape[0])
    return max_diag, bool(max_diag <= 1.0 / sigma**2)


def condition_report(X, S, signs=None, sigma=1.0, eta=0.0):
    max_cross, lam_min, margin, ec, ec_strong = eigenvalue_condition(X, S)
    values, ic_max, ic = irrepresentable_condition(X, S, signs, eta)
    c1_max, c1 = check_c1(X, sigma)
    return ConditionReport(
        ec_max_cross=max_cross, ec_lambda_min=lam_min, ec_margin=margin,
        ec_holds=ec, ec_strengthened_holds=ec_strong,
        ic_values=values, ic_max=ic_max, ic_holds=ic, ic_eta=eta,
        c1_max_diag=c1_max, c1_holds=c1,
    )


def event_an(W, lam, n, scale_factor=1.0):
    """||W||_inf <= scale_factor * lam / sqrt(n), boundary included."""
    if lam < 0 or n < 1:
        raise InvalidInputError("need lam >= 0 and n >= 1")
    W = np.asarray(W, dtype=float)
    return bool(np.max(np.abs(W), initial=0.0) <= scale_factor * lam / np.sqrt(n))


def mn_radius(delta, lambda_min_c11, lam, n):
    """(2 / (1 - delta)) * lam / (lambda_min_c11 * sqrt(n))."""
    if not 0 < delta < 1:
        raise InvalidInputError("delta must lie in (0, 1)")
    if not lambda_min_c11 > 0:
        raise InvalidInputError("lambda_min_c11 must be positive")
    return 2.0 / (1.0 - delta) * lam / (lambda_min_c11 * np.sqrt(n))
