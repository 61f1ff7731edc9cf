"""Replicated support-recovery experiments.

A replicate is fully determined by ``(master_seed, index)``: its instance
seed is ``derive_seed(master_seed, "replicate", index)``. Replicates run
serially or in a process pool and are merged in index order, so the output
never depends on scheduling.
"""

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import bounds
from .core import noise_score
from .diagnostics import condition_report
from .exceptions import ConvergenceError, InsufficientSampleError, InvalidInputError, SingularBlockError
from .io import write_csv_rows, write_manifest, prepare_out_dir
from .rng import derive_seed
from .solver import GRID_COUNT, GRID_RATIO, lambda_grid, lambda_max, lasso_path
from .synthgen import GeneratorSpec, generate

SCHEMA_VERSION = "1"
MAX_FAILURE_RATE = 0.05
THEOREM1_MIN_REPLICATES = 50
THEOREM1_SE_MULTIPLIER = 3.0

POLICIES = ("grid", "fixed", "theorem2", "theorem3")
CRITERIA = ("at_lambda", "anywhere_on_path")


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class LambdaPolicy:
    """How each replicate's lambda values are chosen.

    ``grid``: ``count`` log-spaced values from the replicate's lambda_max down
    to ``ratio * lambda_max``. ``fixed``: the given ``values`` (multiplied by
    sqrt(n) when ``per_sqrt_n``). ``theorem2``: sqrt(n) * n^(eta/2).
    ``theorem3``: sqrt(n) * K * n * (1 + t).
    """

    kind: str = "grid"
    count: int = GRID_COUNT
    ratio: float = GRID_RATIO
    values: Tuple[float, ...] = ()
    per_sqrt_n: bool = False
    eta: Optional[float] = None
    t: Optional[float] = None
    K: Optional[float] = None

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise InvalidInputError(f"unknown lambda policy {self.kind!r}")
        if self.kind == "grid" and self.count < 2:
            raise InvalidInputError("grid policy needs count >= 2")
        if self.kind == "fixed":
            if not self.values or min(self.values) < 0:
                raise InvalidInputError("fixed policy needs nonnegative values")
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.kind == "theorem2" and self.eta is None:
            raise InvalidInputError("theorem2 policy needs eta")
        if self.kind == "theorem3" and (self.t is None or self.K is None):
            raise InvalidInputError("theorem3 policy needs t and K")

    def lambdas(self, X, y):
        """Strictly decreasing lambda values for one instance."""
        n = X.shape[0]
        if self.kind == "grid":
            return lambda_grid(lambda_max(X, y), self.count, self.ratio)
        if self.kind == "fixed":
            scale = math.sqrt(n) if self.per_sqrt_n else 1.0
            return np.array(sorted(set(self.values), reverse=True)) * scale
        if self.kind == "theorem2":
            return np.array([bounds.theorem2_lambda(n, self.eta)])
        return np.array([bounds.theorem3_lambda(n, self.t, self.K)])


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorSpec
    replicates: int = 100
    lambda_policy: LambdaPolicy = LambdaPolicy()
    recovery_criterion: str = "anywhere_on_path"
    master_seed: int = 0
    output_path: Optional[str] = None
    max_support: Optional[int] = None
    an_scale_factor: float = 1.0
    workers: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise InvalidInputError("replicates must be >= 1")
        if self.recovery_criterion not in CRITERIA:
            raise InvalidInputError(f"unknown recovery criterion {self.recovery_criterion!r}")

    def to_dict(self):
        d = asdict(self)
        d["generator"] = self.generator.to_dict()
        d.pop("workers")
        return d


@dataclass
class ReplicateRecord:
    index: int
    seed: int
    lambdas: np.ndarray
    a_n: np.ndarray
    exact: np.ndarray
    sign: np.ndarray
    support_size: np.ndarray
    w_inf: float
    ec_holds: Optional[bool] = None
    ec_strengthened_holds: Optional[bool] = None
    ec_max_cross: Optional[float] = None
    ec_lambda_min: Optional[float] = None
    ic_max: Optional[float] = None
    ic_holds: Optional[bool] = None
    ic_fails_for_all_eta: Optional[bool] = None
    c1_holds: Optional[bool] = None
    path_stop: Optional[int] = None
    failure: Optional[str] = None

    @property
    def ok(self):
        return self.failure is None

    @property
    def recovery_anywhere(self):
        return bool(self.exact.any())


def _rate(hits, total):
    r = hits / total if total else float("nan")
    se = math.sqrt(r * (1 - r) / total) if total else float("nan")
    return r, se


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: List[ReplicateRecord]
    aggregates: dict = field(default_factory=dict)
    per_lambda: List[dict] = field(default_factory=list)
    bound_values: dict = field(default_factory=dict)

    @property
    def ok_records(self):
        return [r for r in self.records if r.ok]


def run_replicate(config, index):
    seed = derive_seed(config.master_seed, "replicate", index)
    inst = generate(config.generator, seed)
    S = inst.support_true
    lambdas = config.lambda_policy.lambdas(inst.X, inst.y)
    K = lambdas.size
    W = noise_score(inst.X, inst.noise)
    w_inf = float(np.max(np.abs(W)))
    # A_n needs only W, so it is known even where the path is cut short
    a_n = w_inf <= config.an_scale_factor * lambdas / math.sqrt(inst.n)
    rec = ReplicateRecord(
        index=index, seed=seed, lambdas=lambdas, a_n=a_n,
        exact=np.zeros(K, dtype=bool), sign=np.zeros(K, dtype=bool),
        support_size=np.full(K, -1, dtype=np.int64), w_inf=w_inf,
    )
    signs = np.sign(inst.beta_true[S])
    try:
        rep = condition_report(inst.X, S, signs=signs, sigma=inst.sigma)
        rec.ec_holds = rep.ec_holds
        rec.ec_strengthened_holds = rep.ec_strengthened_holds
        rec.ec_max_cross = rep.ec_max_cross
        rec.ec_lambda_min = rep.ec_lambda_min
        rec.ic_max = rep.ic_max
        rec.ic_holds = rep.ic_holds
        rec.ic_fails_for_all_eta = rep.ic_fails_for_all_eta
        rec.c1_holds = rep.c1_holds
    except SingularBlockError:
        rec.ec_holds = rec.ec_strengthened_holds = False
    try:
        path = lasso_path(inst.X, inst.y, lambdas=lambdas, max_support=config.max_support)
    except ConvergenceError as err:
        rec.failure = str(err)
        return rec
    for k, fit in enumerate(path.fits):
        rec.support_size[k] = len(fit.support_hat)
        rec.exact[k] = np.array_equal(fit.support_hat, S)
        rec.sign[k] = rec.exact[k] and np.array_equal(np.sign(fit.beta_hat[S]), signs)
    rec.path_stop = len(path.fits) if path.truncated else None
    return rec


def _run_chunk(args):
    config, indices = args
    return [run_replicate(config, i) for i in indices]


def run_records(config):
    indices = list(range(config.replicates))
    if config.workers <= 1:
        return [run_replicate(config, i) for i in indices]
    chunks = [(config, indices[w::config.workers]) for w in range(config.workers)]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        merged = [rec for part in pool.map(_run_chunk, chunks) for rec in part]
    return sorted(merged, key=lambda r: r.index)


def aggregate(config, records):
    """Rates over successful replicates; per-lambda rows are by grid index."""
    ok = [r for r in records if r.ok]
    R = len(ok)
    agg = {"replicates": len(records), "failures": len(records) - R,
           "recovery_criterion": config.recovery_criterion}

    def freq(name):
        vals = [getattr(r, name) for r in ok if getattr(r, name) is not None]
        return sum(vals) / len(vals) if vals else float("nan")

    for name in ("ec_holds", "ec_strengthened_holds", "ic_holds", "ic_fails_for_all_eta", "c1_holds"):
        agg[name + "_rate"] = freq(name)
    agg["recovery_anywhere_rate"], agg["recovery_anywhere_se"] = _rate(
        sum(r.recovery_anywhere for r in ok), R)
    per_lambda = []
    if ok:
        K = ok[0].lambdas.size
        for k in range(K):
            rec_rate, rec_se = _rate(sum(bool(r.exact[k]) for r in ok), R)
            an_rate, _ = _rate(sum(bool(r.a_n[k]) for r in ok), R)
            sign_rate, _ = _rate(sum(bool(r.sign[k]) for r in ok), R)
            per_lambda.append({
                "lambda_index": k,
                "lambda_mean": float(np.mean([r.lambdas[k] for r in ok])),
                "recovery_rate": rec_rate,
                "recovery_se": rec_se,
                "sign_recovery_rate": sign_rate,
                "a_n_rate": an_rate,
            })
    if config.recovery_criterion == "at_lambda" and per_lambda:
        best = max(per_lambda, key=lambda row: row["recovery_rate"])
        agg["recovery_rate"], agg["recovery_se"] = best["recovery_rate"], best["recovery_se"]
        agg["recovery_lambda_index"] = best["lambda_index"]
    else:
        agg["recovery_rate"], agg["recovery_se"] = agg["recovery_anywhere_rate"], agg["recovery_anywhere_se"]
    return agg, per_lambda


def _bound_values(config):
    policy = config.lambda_policy
    n, p, _ = config.generator.sizes
    out = {}
    if policy.kind == "theorem2":
        c = math.log(p) / math.log(n)
        out["c"] = c
        out["lambda"] = bounds.theorem2_lambda(n, policy.eta)
        if policy.eta > c:
            out["theorem2_failure_bound"] = bounds.theorem2_failure_bound(n, c, policy.eta)
        out["gaussian_failure_bound_polynomial"] = bounds.gaussian_failure_bound_polynomial(n, c, policy.eta)
    elif policy.kind == "theorem3":
        out["lambda"] = bounds.theorem3_lambda(n, policy.t, policy.K)
        out["theorem3_failure_bound"] = bounds.theorem3_failure_bound(n, policy.t)
    return out


def run_experiment(config):
    """Generate, fit and score every replicate, then aggregate.

    Solver failures are kept as records; more than 5% of them is an
    ExperimentError. When ``config.output_path`` is set the result is also
    written there (see ``write_experiment``).
    """
    records = run_records(config)
    failures = sum(not r.ok for r in records)
    if failures > MAX_FAILURE_RATE * len(records):
        raise ExperimentError(f"{failures} of {len(records)} replicates failed to converge")
    agg, per_lambda = aggregate(config, records)
    result = ExperimentResult(config=config, records=records, aggregates=agg,
                              per_lambda=per_lambda, bound_values=_bound_values(config))
    if config.output_path:
        write_experiment(result, config.output_path)
    return result


@dataclass
class Theorem1Report:
    rows: List[dict]
    counterexamples: List[dict]
    holding: int

    @property
    def flagged(self):
        return [row["lambda_index"] for row in self.rows if row["flagged"]]

    @property
    def passed(self):
        return not self.flagged and not self.counterexamples


def theorem1_report(result, min_holding=THEOREM1_MIN_REPLICATES):
    """Compare P(exact recovery) with P(A_n) among strengthened-EC replicates.

    A lambda is flagged when recovery_rate < a_n_rate - 3 * SE, with SE the
    combined standard error of the two rates. Counterexamples are replicates
    where A_n holds and the strengthened EC holds but the support is wrong.
    """
    holding = [r for r in result.ok_records if r.ec_strengthened_holds]
    m = len(holding)
    if m < min_holding:
        raise InsufficientSampleError(
            f"only {m} replicates satisfy the strengthened eigenvalue condition (need {min_holding})")
    K = holding[0].lambdas.size
    rows = []
    for k in range(K):
        rec, rec_se = _rate(sum(bool(r.exact[k]) for r in holding), m)
        an, an_se = _rate(sum(bool(r.a_n[k]) for r in holding), m)
        se = math.sqrt(rec_se**2 + an_se**2)
        margin = rec - an
        rows.append({
            "lambda_index": k,
            "lambda_mean": float(np.mean([r.lambdas[k] for r in holding])),
            "replicates": m,
            "recovery_rate": rec,
            "a_n_rate": an,
            "margin": margin,
            "se": se,
            "flagged": bool(margin < -THEOREM1_SE_MULTIPLIER * se),
        })
    gen = result.config.generator.to_dict()
    counter = []
    for r in holding:
        for k in range(K):
            if r.a_n[k] and not r.exact[k]:
                counter.append({
                    "replicate": r.index, "seed": r.seed, "lambda_index": k,
                    "lambda": float(r.lambdas[k]), "w_inf": r.w_inf,
                    "support_size": int(r.support_size[k]), "generator": gen,
                })
    return Theorem1Report(rows=rows, counterexamples=counter, holding=m)


def verify_theorem1(config):
    if config.lambda_policy.kind not in ("grid", "fixed"):
        raise InvalidInputError("theorem 1 check needs a grid or fixed lambda policy")
    return theorem1_report(run_experiment(config))


REPLICATE_COLUMNS = ("replicate", "seed", "lambda_index", "lambda", "a_n", "exact_recovery",
                     "sign_recovery", "support_size", "w_inf", "ec_holds", "ec_strengthened_holds",
                     "ec_max_cross", "ec_lambda_min", "ic_max", "ic_holds", "c1_holds", "failure")


def replicate_rows(records):
    for r in records:
        for k in range(r.lambdas.size):
            yield (r.index, r.seed, k, r.lambdas[k], int(r.a_n[k]), int(r.exact[k]),
                   int(r.sign[k]), int(r.support_size[k]), r.w_inf, r.ec_holds,
                   r.ec_strengthened_holds, r.ec_max_cross, r.ec_lambda_min, r.ic_max,
                   r.ic_holds, r.c1_holds, r.failure or "")


def write_experiment(result, out_dir, force=False, invocation=None):
    """replicates.csv, aggregates.csv, summary.json, theorem1.csv and
    counterexamples.jsonl (when the EC-holding sample is large enough), manifest.json."""
    out_dir = prepare_out_dir(out_dir, force)
    cfg = result.config
    write_csv_rows(os.path.join(out_dir, "replicates.csv"), REPLICATE_COLUMNS,
                   replicate_rows(result.records))
    if result.per_lambda:
        cols = tuple(result.per_lambda[0])
        write_csv_rows(os.path.join(out_dir, "aggregates.csv"), cols,
                       (tuple(row[c] for c in cols) for row in result.per_lambda))
    summary = {"aggregates": result.aggregates, "bound_values": result.bound_values}
    t1 = None
    try:
        t1 = theorem1_report(result)
    except InsufficientSampleError as err:
        summary["theorem1"] = {"evaluated": False, "reason": str(err)}
    if t1 is not None:
        cols = tuple(t1.rows[0])
        write_csv_rows(os.path.join(out_dir, "theorem1.csv"), cols,
                       (tuple(row[c] for c in cols) for row in t1.rows))
        with open(os.path.join(out_dir, "counterexamples.jsonl"), "w") as fh:
            for c in t1.counterexamples:
                fh.write(json.dumps(c, sort_keys=True) + "\n")
        summary["theorem1"] = {"evaluated": True, "holding_replicates": t1.holding,
                               "flagged_lambda_indices": t1.flagged,
                               "counterexamples": len(t1.counterexamples), "passed": t1.passed}
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(out_dir, invocation=invocation, seed=cfg.master_seed,
                   extra={"config": cfg.to_dict(), "schema_version": SCHEMA_VERSION})
    return t1
