"""Reproduction recipes for the simulation studies.

Each study writes, under its output directory:

* ``summary.csv``: one row per design with recovery and condition rates
* ``verdicts.csv``: replicate counts by (strengthened EC, IC failure, recovered)
* ``profiles.csv``: lambda, coefficient index, value for the first replicate's path
* one sub-directory per design holding the raw experiment output
* PNG figures unless disabled
"""

import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .harness import (ExperimentConfig, LambdaPolicy, SCHEMA_VERSION, run_experiment,
                      write_experiment)
from .io import prepare_out_dir, write_csv_rows, write_manifest
from .rng import derive_seed
from .solver import lasso_path
from .synthgen import NOISE_DISTRIBUTIONS, TABLE1_SETTINGS, GeneratorSpec, generate

STUDIES = ("example1", "example2", "table1", "noise")

SUMMARY_COLUMNS = ("label", "kind", "setting_id", "distribution", "centered", "n", "p", "q",
                   "replicates", "failures", "criterion", "recovery_rate", "recovery_se",
                   "ec_holds_rate", "ec_strengthened_holds_rate", "ic_holds_rate",
                   "ic_fails_for_all_eta_rate", "c1_holds_rate")


@dataclass
class StudyOutcome:
    study: str
    out_dir: str
    summary: List[dict] = field(default_factory=list)
    theorem1: Dict[str, object] = field(default_factory=dict)

    @property
    def theorem1_flagged(self):
        return any(not rep.passed for rep in self.theorem1.values())


def _designs(study):
    """(label, GeneratorSpec, max_support) for every design in a study."""
    if study == "example1":
        return [(f"example1_case{c}", GeneratorSpec(f"example1_case{c}"), None) for c in (1, 2)]
    if study == "example2":
        return [(f"example2_case{c}", GeneratorSpec(f"example2_case{c}"), 50) for c in (1, 2)]
    if study == "table1":
        return [(f"setting{s:02d}", GeneratorSpec("table1", setting_id=s), TABLE1_SETTINGS[s][0] // 2)
                for s in sorted(TABLE1_SETTINGS)]
    if study in ("noise", "noise_uncentered"):
        center = study == "noise"
        suffix = "" if center else "_uncentered"
        return [(f"{d}{suffix}", GeneratorSpec("noise_study", noise_distribution=d, center_noise=center), 50)
                for d in NOISE_DISTRIBUTIONS]
    raise ValueError(f"unknown study {study!r}; choose from {', '.join(STUDIES)}")


def _summary_row(label, spec, result):
    n, p, q = spec.sizes
    a = result.aggregates
    return {
        "label": label, "kind": spec.kind, "setting_id": spec.setting_id,
        "distribution": spec.noise_distribution if spec.kind == "noise_study" else None,
        "centered": spec.center_noise if spec.kind == "noise_study" else None,
        "n": n, "p": p, "q": q, "replicates": a["replicates"], "failures": a["failures"],
        "criterion": a["recovery_criterion"], "recovery_rate": a["recovery_rate"],
        "recovery_se": a["recovery_se"], "ec_holds_rate": a["ec_holds_rate"],
        "ec_strengthened_holds_rate": a["ec_strengthened_holds_rate"],
        "ic_holds_rate": a["ic_holds_rate"], "ic_fails_for_all_eta_rate": a["ic_fails_for_all_eta_rate"],
        "c1_holds_rate": a["c1_holds_rate"],
    }


def _profile(spec, master_seed):
    inst = generate(spec, derive_seed(master_seed, "replicate", 0))
    path = lasso_path(inst.X, inst.y)
    return inst, path


def run_study(study, master_seed, replicates, out_dir, workers=1, figures=True,
              force=False, invocation=None):
    """Run every design of ``study`` and write the study's files to ``out_dir``."""
    designs = _designs(study)
    if study == "noise":
        designs = designs + _designs("noise_uncentered")
    prepare_out_dir(out_dir, force)
    outcome = StudyOutcome(study=study, out_dir=out_dir)
    verdict_rows = []
    profile_rows = []
    panels = []
    for label, spec, max_support in designs:
        config = ExperimentConfig(generator=spec, replicates=replicates, lambda_policy=LambdaPolicy(),
                                  recovery_criterion="anywhere_on_path", master_seed=master_seed,
                                  max_support=max_support, workers=workers)
        result = run_experiment(config)
        t1 = write_experiment(result, os.path.join(out_dir, label), force=force)
        if t1 is not None:
            outcome.theorem1[label] = t1
        outcome.summary.append(_summary_row(label, spec, result))
        counts = Counter((r.ec_strengthened_holds, r.ic_fails_for_all_eta, r.recovery_anywhere)
                         for r in result.ok_records)
        for key in sorted(counts, key=lambda k: tuple(str(v) for v in k)):
            verdict_rows.append((label,) + key + (counts[key],))
        inst, path = _profile(spec, master_seed)
        coefs = path.coefs
        for j in np.flatnonzero(np.any(coefs != 0, axis=0)):
            for lam, value in zip(path.lambdas, coefs[:, j]):
                profile_rows.append((label, lam, int(j) + 1, value))
        panels.append((label, path.lambdas, coefs, inst.support_true))

    summary_main = [row for row in outcome.summary if not str(row["label"]).endswith("_uncentered")]
    summary_extra = [row for row in outcome.summary if str(row["label"]).endswith("_uncentered")]
    write_csv_rows(os.path.join(out_dir, "summary.csv"), SUMMARY_COLUMNS,
                   (tuple(row[c] for c in SUMMARY_COLUMNS) for row in summary_main))
    if summary_extra:
        write_csv_rows(os.path.join(out_dir, "summary_uncentered.csv"), SUMMARY_COLUMNS,
                       (tuple(row[c] for c in SUMMARY_COLUMNS) for row in summary_extra))
    write_csv_rows(os.path.join(out_dir, "verdicts.csv"),
                   ("label", "ec_strengthened_holds", "ic_fails_for_all_eta", "recovered", "count"),
                   verdict_rows)
    write_csv_rows(os.path.join(out_dir, "profiles.csv"), ("label", "lambda", "j", "value"),
                   profile_rows)
    if figures:
        from . import plots

        if study in ("example1", "example2", "noise"):
            shown = [p for p in panels if not p[0].endswith("_uncentered")]
            plots.plot_path_profiles(shown, os.path.join(out_dir, f"{study}_paths.png"))
        if study == "noise":
            extra = [p for p in panels if p[0].endswith("_uncentered")]
            plots.plot_path_profiles(extra, os.path.join(out_dir, "noise_uncentered_paths.png"))
        plots.plot_recovery_rates([r["label"] for r in summary_main],
                                  [r["recovery_rate"] for r in summary_main],
                                  [r["recovery_se"] for r in summary_main],
                                  os.path.join(out_dir, f"{study}_recovery.png"))
        for label, rep in outcome.theorem1.items():
            plots.plot_theorem1(rep.rows, os.path.join(out_dir, f"{label}_theorem1.png"),
                                title=f"{label}: recovery vs A_n (strengthened EC)")
    write_manifest(out_dir, invocation=invocation, seed=master_seed,
                   extra={"study": study, "replicates": replicates, "schema_version": SCHEMA_VERSION,
                          "recovery_criterion": "anywhere_on_path"})
    return outcome
