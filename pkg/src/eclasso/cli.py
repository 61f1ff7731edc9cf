"""Command-line entry point: ``eclasso <subcommand> ...``.

Column numbers on the command line and in output files are 1-based.
Exit codes: 0 success, 1 execution error, 2 a Theorem-1 check was flagged,
64 usage error.
"""

import argparse
import configparser
import json
import math
import os
import sys

import numpy as np

from . import bounds
from .diagnostics import condition_report
from .exceptions import InvalidInputError
from .io import (dump_json, prepare_out_dir, read_matrix, read_vector, write_csv_rows,
                 write_manifest, write_matrix)
from .rng import DEFAULT_SEED

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_THEOREM1_FLAG = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _parse_indices(text, p=None):
    try:
        idx = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"cannot parse column list {text!r}")
    if any(i < 1 for i in idx) or (p is not None and any(i > p for i in idx)):
        raise UsageError(f"column numbers must lie in 1..{p}")
    return np.array(idx, dtype=np.int64) - 1


def _parse_signs(text):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok in ("+", "+1", "1"):
            out.append(1.0)
        elif tok in ("-", "-1"):
            out.append(-1.0)
        else:
            raise UsageError(f"bad sign {tok!r}; use + or -")
    return np.array(out)


def _load_problem(args):
    X = read_matrix(args.design)
    y = read_vector(args.response)
    if y.shape[0] != X.shape[0]:
        raise UsageError(f"response has {y.shape[0]} entries but design has {X.shape[0]} rows")
    scale = np.ones(X.shape[1])
    if args.normalize:
        scale = np.sqrt(np.einsum("ij,ij->j", X, X) / X.shape[0])
        if np.any(scale == 0):
            raise UsageError("cannot normalize an all-zero column")
        X = X / scale
    return X, y, scale


def _out_dir(args):
    if args.out_dir is None:
        return None
    return prepare_out_dir(args.out_dir, args.force)


def _finish(args, argv, out_dir, extra=None):
    if out_dir is not None:
        write_manifest(out_dir, invocation=["eclasso"] + list(argv), seed=args.seed, extra=extra)


# -- subcommands -------------------------------------------------------------

def cmd_solve(args, argv):
    from .solver import solve_lasso

    X, y, scale = _load_problem(args)
    fit = solve_lasso(X, y, args.lam)
    beta = fit.beta_hat / scale
    rows = [(j + 1, beta[j]) for j in range(beta.size)]
    out_dir = _out_dir(args)
    if args.format == "json":
        dump_json({"lambda": fit.lam, "coefficients": beta, "support": (fit.support_hat + 1).tolist(),
                   "kkt_residual": fit.kkt_residual, "objective": fit.objective,
                   "iterations": fit.iterations, "normalized": args.normalize})
    else:
        print("index,coefficient")
        for j, b in rows:
            print(f"{j},{_fmt(b)}")
        print(f"# kkt_residual={_fmt(fit.kkt_residual)}")
    if out_dir:
        write_csv_rows(os.path.join(out_dir, "fit.csv"), ("index", "coefficient"), rows)
    _finish(args, argv, out_dir, {"kkt_residual": fit.kkt_residual})
    return EXIT_OK


PATH_COLUMNS = ("row_type", "lambda", "j", "beta_j", "support_size", "kkt_residual")


def cmd_path(args, argv):
    from .solver import lasso_path

    X, y, scale = _load_problem(args)
    target = _parse_indices(args.support, X.shape[1]) if args.support else None
    res = lasso_path(X, y, count=args.grid_count, ratio=args.grid_ratio, target_support=target)
    rows = []
    for fit in res.fits:
        beta = fit.beta_hat / scale
        for j in fit.support_hat:
            rows.append(("coef", fit.lam, int(j) + 1, beta[j], None, None))
        rows.append(("summary", fit.lam, None, None, len(fit.support_hat), fit.kkt_residual))
    out_dir = _out_dir(args)
    if out_dir:
        write_csv_rows(os.path.join(out_dir, "path.csv"), PATH_COLUMNS, rows)
        print(f"wrote {len(res.fits)} fits to {os.path.join(out_dir, 'path.csv')}")
    else:
        write_csv_rows(sys.stdout, PATH_COLUMNS, rows)
    if target is not None:
        hits = res.recovery_lambda_set
        print(f"# target support recovered at {len(hits)} of {len(res.fits)} lambda values",
              file=sys.stderr if not out_dir else sys.stdout)
    _finish(args, argv, out_dir)
    return EXIT_OK


REPORT_FIELDS = ("ec_max_cross", "ec_lambda_min", "ec_margin", "ec_holds", "ec_strengthened_holds",
                 "ic_max", "ic_holds", "c1_holds")


def cmd_diagnose(args, argv):
    X = read_matrix(args.design)
    S = _parse_indices(args.support, X.shape[1])
    signs = _parse_signs(args.signs) if args.signs else None
    rep = condition_report(X, S, signs=signs, sigma=args.sigma, eta=args.eta)
    d = rep.to_dict()
    payload = {k: d[k] for k in REPORT_FIELDS}
    payload.update(ic_eta=rep.ic_eta, c1_max_diag=rep.c1_max_diag,
                   ic_fails_for_all_eta=rep.ic_fails_for_all_eta)
    if args.format != "json":
        for k in REPORT_FIELDS:
            v = payload[k]
            print(f"{k}={str(v).lower() if isinstance(v, bool) else _fmt(v)}")
    dump_json(payload)
    out_dir = _out_dir(args)
    if out_dir:
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            dump_json(payload, fh)
    _finish(args, argv, out_dir)
    return EXIT_OK


def _bound_and_lambda(theorem, n, args):
    if theorem == "2":
        return bounds.theorem2_failure_bound(n, args.c, args.eta), bounds.theorem2_lambda(n, args.eta)
    if theorem == "3":
        if args.t is None or args.K is None:
            raise UsageError("--theorem 3 needs --t and --K")
        return bounds.theorem3_failure_bound(n, args.t), bounds.theorem3_lambda(n, args.t, args.K)
    if theorem == "gauss-poly":
        return (bounds.gaussian_failure_bound_polynomial(n, args.c, args.eta),
                bounds.theorem2_lambda(n, args.eta))
    return (bounds.gaussian_failure_bound_ultrahigh(n, args.c, args.eta),
            math.sqrt(n) * float(n) ** args.eta)


def _require(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"--theorem {args.theorem} needs {', '.join(missing)}")


def cmd_bounds(args, argv):
    if args.theorem in ("2", "gauss-poly", "gauss-ultra"):
        _require(args, "c", "eta")
    if args.action == "table":
        ns = np.unique(np.round(np.logspace(math.log10(args.n_min), math.log10(args.n_max),
                                            args.points)).astype(int))
        rows = []
        for n in ns:
            b, lam = _bound_and_lambda(args.theorem, int(n), args)
            rows.append((int(n), b, lam))
        out_dir = _out_dir(args)
        cols = ("n", "failure_bound", "lambda")
        if out_dir:
            write_csv_rows(os.path.join(out_dir, "bounds.csv"), cols, rows)
            print(f"wrote {len(rows)} rows to {os.path.join(out_dir, 'bounds.csv')}")
        else:
            write_csv_rows(sys.stdout, cols, rows)
        _finish(args, argv, out_dir)
        return EXIT_OK
    if args.n is None:
        raise UsageError("bounds needs --n")
    b, lam = _bound_and_lambda(args.theorem, args.n, args)
    out = {"theorem": args.theorem, "failure_bound": b, "lambda": lam}
    if args.L is not None and args.p is not None:
        out["bernstein_alpha"] = bounds.bernstein_alpha(args.L, args.n, args.p)
    if args.format == "json":
        dump_json(out)
    else:
        print(_fmt(b))
        print(f"lambda={_fmt(lam)}")
        if "bernstein_alpha" in out:
            print(f"bernstein_alpha={_fmt(out['bernstein_alpha'])}")
    out_dir = _out_dir(args)
    if out_dir:
        with open(os.path.join(out_dir, "bounds.json"), "w") as fh:
            dump_json(out, fh)
    _finish(args, argv, out_dir)
    return EXIT_OK


def cmd_generate(args, argv):
    from .synthgen import GeneratorSpec, generate

    if args.out_dir is None:
        raise UsageError("generate needs --out-dir")
    spec = GeneratorSpec(args.kind, n=args.n, setting_id=args.setting_id,
                         noise_distribution=args.noise, center_noise=not args.no_center)
    inst = generate(spec, args.seed)
    out_dir = _out_dir(args)
    write_matrix(os.path.join(out_dir, "X.csv"), inst.X)
    write_matrix(os.path.join(out_dir, "y.csv"), inst.y)
    write_matrix(os.path.join(out_dir, "beta.csv"), inst.beta_true)
    write_matrix(os.path.join(out_dir, "noise.csv"), inst.noise)
    _finish(args, argv, out_dir, {"spec": spec.to_dict(),
                                  "support": (inst.support_true + 1).tolist()})
    n, p, q = spec.sizes
    print(f"wrote {args.kind} instance (n={n}, p={p}, q={q}, seed={args.seed}) to {out_dir}")
    return EXIT_OK


def load_config(path, seed=None, out_dir=None):
    """ExperimentConfig from an INI-style key = value file (see README)."""
    from .harness import ExperimentConfig, LambdaPolicy
    from .synthgen import GeneratorSpec

    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not cp.read(path):
        raise UsageError(f"cannot read config file {path}")
    if "experiment" not in cp:
        raise UsageError(f"{path}: missing [experiment] section")
    sec = cp["experiment"]

    def opt(key, conv=str, default=None):
        raw = sec.get(key, "").strip()
        return conv(raw) if raw else default

    def flag(key, default):
        return sec.getboolean(key, fallback=default)

    known = {"kind", "n", "setting_id", "noise_distribution", "center_noise", "noise_scale",
             "replicates", "master_seed", "lambda_policy", "grid_count", "grid_ratio",
             "lambda_values", "lambda_per_sqrt_n", "eta", "t", "K", "recovery_criterion",
             "output_path", "max_support", "an_scale_factor", "workers"}
    unknown = set(sec) - {k.lower() for k in known}
    if unknown:
        raise UsageError(f"{path}: unknown keys {', '.join(sorted(unknown))}")
    gen = GeneratorSpec(opt("kind", default="example1_case2"), n=opt("n", int, 100),
                        setting_id=opt("setting_id", int), noise_distribution=opt("noise_distribution", default="gaussian"),
                        center_noise=flag("center_noise", True), noise_scale=opt("noise_scale", float, 1.0))
    values = opt("lambda_values", lambda s: tuple(float(v) for v in s.split(",")), ())
    policy = LambdaPolicy(kind=opt("lambda_policy", default="grid"), count=opt("grid_count", int, 100),
                          ratio=opt("grid_ratio", float, 1e-3), values=values,
                          per_sqrt_n=flag("lambda_per_sqrt_n", False), eta=opt("eta", float),
                          t=opt("t", float), K=opt("k", float))
    master = seed if seed is not None else opt("master_seed", int, DEFAULT_SEED)
    return ExperimentConfig(generator=gen, replicates=opt("replicates", int, 100), lambda_policy=policy,
                            recovery_criterion=opt("recovery_criterion", default="anywhere_on_path"),
                            master_seed=master, output_path=out_dir or opt("output_path"),
                            max_support=opt("max_support", int), an_scale_factor=opt("an_scale_factor", float, 1.0),
                            workers=opt("workers", int, 1))


def cmd_simulate(args, argv):
    from dataclasses import replace

    from .harness import run_experiment, write_experiment

    config = load_config(args.config, seed=args.seed_given, out_dir=args.out_dir)
    if args.workers is not None:
        config = replace(config, workers=args.workers)
    out_dir = config.output_path
    result = run_experiment(replace(config, output_path=None))
    a = result.aggregates
    print(f"{config.generator.kind}: {a['replicates']} replicates, {a['failures']} failures, "
          f"recovery ({a['recovery_criterion']}) = {a['recovery_rate']:.3f} +/- {a['recovery_se']:.3f}")
    print(f"EC {a['ec_holds_rate']:.3f}  strengthened EC {a['ec_strengthened_holds_rate']:.3f}  "
          f"IC {a['ic_holds_rate']:.3f}  C.1 {a['c1_holds_rate']:.3f}")
    t1 = None
    if out_dir:
        t1 = write_experiment(result, out_dir, force=args.force, invocation=["eclasso"] + list(argv))
        print(f"results written to {out_dir}")
    else:
        from .harness import theorem1_report
        from .exceptions import InsufficientSampleError
        try:
            t1 = theorem1_report(result)
        except InsufficientSampleError as err:
            print(f"theorem 1 check skipped: {err}")
    if t1 is not None:
        print(f"theorem 1 check on {t1.holding} strengthened-EC replicates: "
              f"{len(t1.flagged)} flagged lambda values, {len(t1.counterexamples)} counterexamples")
        if not t1.passed:
            return EXIT_THEOREM1_FLAG
    return EXIT_OK


def cmd_reproduce(args, argv):
    from .reproduce import run_study

    out_dir = args.out_dir or f"reproduce-{args.study}"
    outcome = run_study(args.study, args.seed, args.replicates, out_dir, workers=args.workers,
                        figures=not args.no_figures, force=args.force,
                        invocation=["eclasso"] + list(argv))
    for row in outcome.summary:
        print(f"{row['label']:>24}  n={row['n']:<4} p={row['p']:<5} q={row['q']:<3} "
              f"recovery={row['recovery_rate']:.3f}  strengthened EC={row['ec_strengthened_holds_rate']:.3f}  "
              f"IC fails={row['ic_fails_for_all_eta_rate']:.3f}")
    for label, rep in outcome.theorem1.items():
        print(f"theorem 1 [{label}]: {len(rep.flagged)} flagged lambda values, "
              f"{len(rep.counterexamples)} counterexamples")
    print(f"outputs in {out_dir}")
    return EXIT_THEOREM1_FLAG if outcome.theorem1_flagged else EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help=f"master seed for all randomness (default {DEFAULT_SEED})")
    common.add_argument("--out-dir", default=None, help="directory for output files and manifest.json")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="stdout format")
    common.add_argument("--force", action="store_true", help="allow writing into a non-empty --out-dir")

    parser = _Parser(prog="eclasso", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def problem_flags(p):
        p.add_argument("--design", required=True, help="headerless CSV design matrix, one row per observation")
        p.add_argument("--response", required=True, help="headerless CSV response vector")
        p.add_argument("--normalize", action="store_true",
                       help="scale columns to X_j'X_j/n = 1 before fitting; coefficients are reported on the original scale")

    p = sub.add_parser("solve", parents=[common], help="lasso fit at one lambda")
    problem_flags(p)
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="penalty level (objective has no 1/n)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("path", parents=[common], help="warm-started lasso path on a log grid")
    problem_flags(p)
    p.add_argument("--grid-count", type=int, default=100, help="number of lambda values (default 100)")
    p.add_argument("--grid-ratio", type=float, default=1e-3, help="lambda_min / lambda_max (default 1e-3)")
    p.add_argument("--support", default=None, help="target support, e.g. 1,2; reports where it is recovered")
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("diagnose", parents=[common], help="eigenvalue / irrepresentable / C.1 checks")
    p.add_argument("--design", required=True, help="headerless CSV design matrix")
    p.add_argument("--support", required=True, help="candidate support, 1-based, e.g. 1,2")
    p.add_argument("--signs", default=None, help="coefficient signs on the support, e.g. +,+,- (default all +)")
    p.add_argument("--sigma", type=float, default=1.0, help="noise standard deviation for C.1 (default 1)")
    p.add_argument("--eta", type=float, default=0.0, help="irrepresentable margin eta in [0,1) (default 0)")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("bounds", parents=[common], help="selection-failure bounds and lambda thresholds")
    p.add_argument("action", nargs="?", choices=("value", "table"), default="value",
                   help="'table' writes a CSV sweep over n")
    p.add_argument("--theorem", choices=("2", "3", "gauss-poly", "gauss-ultra"), required=True,
                   help="which bound to evaluate")
    p.add_argument("--n", type=int, default=None, help="sample size")
    p.add_argument("--c", type=float, default=None, help="dimension exponent")
    p.add_argument("--eta", type=float, default=None, help="rate parameter")
    p.add_argument("--t", type=float, default=None, help="theorem 3 deviation parameter")
    p.add_argument("--K", type=float, default=None, help="theorem 3 scale constant")
    p.add_argument("--L", type=float, default=None, help="moment constant for the Bernstein alpha")
    p.add_argument("--p", type=float, default=None, help="number of predictors for the Bernstein alpha")
    p.add_argument("--n-min", type=int, default=10, help="table: smallest n (default 10)")
    p.add_argument("--n-max", type=int, default=10000, help="table: largest n (default 10000)")
    p.add_argument("--points", type=int, default=25, help="table: number of n values (default 25)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("generate", parents=[common], help="write a synthetic instance")
    p.add_argument("--kind", required=True,
                   choices=("example1_case1", "example1_case2", "example2_case1", "example2_case2",
                            "table1", "noise_study"), help="design family")
    p.add_argument("--n", type=int, default=100, help="sample size for the example designs (default 100)")
    p.add_argument("--setting-id", type=int, default=None, help="table1 setting 1..12")
    p.add_argument("--noise", default="gaussian",
                   choices=("gaussian", "exponential", "uniform", "student_t"), help="noise_study law")
    p.add_argument("--no-center", action="store_true", help="keep the noise law's nonzero mean")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo experiment from a config file")
    p.add_argument("--config", required=True, help="INI file with an [experiment] section")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default from config, 1)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reproduce", parents=[common], help="rerun a simulation study")
    p.add_argument("study", choices=("example1", "example2", "table1", "noise"), help="which study")
    p.add_argument("--replicates", type=int, default=100, help="replicates per design (default 100)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = args.seed
    if args.seed is None:
        args.seed = DEFAULT_SEED
    try:
        return args.func(args, argv)
    except UsageError as err:
        print(f"eclasso {args.command}: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidInputError, FileExistsError, OSError, ValueError, RuntimeError) as err:
        print(f"eclasso {args.command}: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
