"""Command-line interface: ``tauindep {test,simulate,moments,verify}``.

Exit codes: 0 success, 1 a verification check failed, 2 bad input or
arguments, 3 degenerate configuration.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import moments, oracle
from .csvio import read_matrix_file
from .engine import StatisticKind, run_test
from .errors import (DegenerateError, DomainError, InputError, PreconditionError,
                     UnsupportedConfigurationError)
from .harness import default_workers, emit_table, parse_config, run_experiment
from .kernels import ObservedMatrix, u_stat_pair
from .moments import MissProfile
from .synthetic import DesignSpec, MissSpec

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2, 3
KIND_CHOICES = ("complete", "cc", "tilde", "ustat")


def _err(msg: str) -> None:
    print(f"tauindep: {msg}", file=sys.stderr)


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def format_result(res, alpha: float) -> str:
    decision = "reject H0" if res.reject(alpha) else "do not reject H0"
    q = ", ".join(f"{v:.4g}" for v in res.q_used.q)
    lines = [
        f"statistic: {res.statistic_kind.value}",
        f"n: {res.n}",
        f"d: {res.d}",
        f"raw: {_fmt(res.raw)}",
        f"null_mean: {_fmt(res.null_mean)}",
        f"null_var: {_fmt(res.null_var)}",
        f"z: {_fmt(res.z)}",
        f"p_value: {_fmt(res.p_value)}",
        f"sided: {res.sided}",
        f"variance: {res.variance_method}",
        f"q_{'hat' if res.q_used.source == 'estimated' else 'known'}: {q}",
        f"decision: {decision} at alpha={alpha:g}",
    ]
    return "\n".join(lines) + "\n"


def cmd_test(args) -> int:
    try:
        m, _ = read_matrix_file(args.input, delimiter=args.delimiter,
                                na_tokens=["NA", *args.na_token], header=args.header)
        q_source = "estimate"
        if args.q is not None:
            q = args.q if len(args.q) > 1 else args.q * m.d
            q_source = MissProfile(tuple(q))
    except (InputError, DomainError) as exc:
        _err(str(exc))
        return EXIT_INPUT
    try:
        res = run_test(m, StatisticKind.parse(args.statistic), q_source, sided=args.sided,
                       moment_estimator=args.moment_estimator)
    except (DegenerateError, PreconditionError, UnsupportedConfigurationError) as exc:
        _err(str(exc))
        return EXIT_DEGENERATE
    except DomainError as exc:
        # e.g. too few rows for the U-statistic, or a profile of the wrong length
        _err(str(exc))
        return EXIT_DEGENERATE if "requires n" in str(exc) else EXIT_INPUT
    sys.stdout.write(format_result(res, args.alpha))
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    except OSError as exc:
        _err(f"cannot read {args.config}: {exc.strerror}")
        return EXIT_INPUT
    except InputError as exc:
        _err(f"{args.config}: {exc}")
        return EXIT_INPUT
    if args.seed is not None:
        cfg = type(cfg)(**{**cfg.__dict__, "master_seed": args.seed})
    report = run_experiment(cfg, workers=args.threads or default_workers(),
                            progress=lambda msg: print(msg, file=sys.stderr))
    print(f"finished in {report.wall_time:.1f}s", file=sys.stderr)
    text = emit_table(report, args.format)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _profile_arg(q, d):
    return MissProfile(tuple(q if len(q) > 1 else q * d))


def cmd_moments(args) -> int:
    n, d = args.n, args.d
    try:
        profile = _profile_arg(args.q, d)
        if profile.d != d:
            raise DomainError(f"got {profile.d} q values for d={d}")
        qrow = profile.row_complete_prob
        rows = [
            ("mean_T_complete", moments.mean_T_complete(n, d)),
            ("var_T_complete", moments.var_T_complete(n, d)),
            ("q_row_complete", qrow),
            ("mean_T_cc", moments.mean_T_cc(n, d, qrow)),
            ("var_T_cc", moments.var_T_cc(n, d, qrow)),
            ("mean_T_tilde", moments.mean_T_tilde(n, profile)),
            ("var_T_tilde", moments.var_T_tilde(n, profile)),
            ("mean_T_hat", moments.mean_T_hat()),
        ]
        if n >= 4:
            rows.append(("var_T_hat", moments.var_T_hat(n, profile)))
        rows.append(("total_missingness_rate", moments.total_missingness_rate(profile)))
    except DomainError as exc:
        _err(str(exc))
        return EXIT_INPUT
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k.ljust(width)}  {v:.6f}  ({v!r})")
    return EXIT_OK


def verify_ustat(n: int, count: int, seed: int) -> tuple:
    rng = np.random.default_rng(seed)
    matches = 0
    for _ in range(count):
        p_obs = rng.choice([0.5, 0.8, 1.0])
        x = rng.standard_normal((n, 2))
        mask = (rng.random((n, 2)) < p_obs).astype(np.int8)
        m = ObservedMatrix(x, mask)
        matches += u_stat_pair(m, 0, 1) == oracle.u_stat_bruteforce(m, 0, 1)
    return matches, count


def verify_moment_checks(n: int, d: int, q: float, reps: int, seed: int, k: float = 3.0):
    """Compare every closed form against Monte Carlo at one (n, d, q).

    Returns a list of ``(name, formula, estimate, se, passed)``.
    """
    profile = MissProfile.uniform(q, d)
    design = DesignSpec(n, d, "normal_std")
    miss = MissSpec.mcar(1.0 - q, d)
    qrow = profile.row_complete_prob
    targets = {
        StatisticKind.COMPLETE_CASE: (moments.mean_T_cc(n, d, qrow), moments.var_T_cc(n, d, qrow)),
        StatisticKind.PAIRWISE: (moments.mean_T_tilde(n, profile), moments.var_T_tilde(n, profile)),
        StatisticKind.U_STAT: (moments.mean_T_hat(), moments.var_T_hat(n, profile)),
    }
    names = {StatisticKind.COMPLETE_CASE: "T_cc", StatisticKind.PAIRWISE: "T_tilde",
             StatisticKind.U_STAT: "T_hat"}
    out = []
    for kind, (mean, var) in targets.items():
        est = oracle.mc_moments(kind, design, miss, reps, seed)
        out.append((f"mean_{names[kind]}", mean, est.mean, est.se_mean,
                    est.mean_within(mean, k)))
        out.append((f"var_{names[kind]}", var, est.variance, est.se_variance,
                    est.variance_within(var, k)))
    return out


def cmd_verify(args) -> int:
    try:
        if args.what == "ustat":
            if not 4 <= args.n <= oracle.BRUTEFORCE_MAX_N:
                raise DomainError(f"n must lie in [4, {oracle.BRUTEFORCE_MAX_N}]")
            matches, total = verify_ustat(args.n, args.count, args.seed)
            print(f"{matches}/{total} exact matches")
            return EXIT_OK if matches == total else EXIT_FAIL
        checks = verify_moment_checks(args.n, args.d, args.q, args.reps, args.seed)
    except DomainError as exc:
        _err(str(exc))
        return EXIT_INPUT
    for name, formula, est, se, ok in checks:
        delta = est - formula
        print(f"{'PASS' if ok else 'FAIL'} {name:<12} formula={formula:.6g} mc={est:.6g} "
              f"delta={delta:+.3g} ({delta / se:+.2f} se)")
    failed = sum(not c[-1] for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} within 3 SE")
    return EXIT_OK if not failed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tauindep", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test total independence of the columns of a CSV file")
    t.add_argument("input")
    t.add_argument("--statistic", choices=KIND_CHOICES, default="ustat")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--sided", choices=("two", "upper"), default="two")
    t.add_argument("--na-token", action="append", default=[],
                   help="extra token marking a missing cell (repeatable); 'NA' and empty always count")
    t.add_argument("--delimiter", default=",")
    hdr = t.add_mutually_exclusive_group()
    hdr.add_argument("--header", dest="header", action="store_const", const=True, default=None)
    hdr.add_argument("--no-header", dest="header", action="store_const", const=False)
    t.add_argument("--q", type=_float_list, default=None,
                   help="known observation probabilities (one value or one per column)")
    t.add_argument("--moment-estimator", choices=("unbiased", "plugin"), default="unbiased")
    t.add_argument("--seed", type=int, default=None, help="accepted for symmetry; the test is deterministic")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", help="run a size/power simulation grid")
    s.add_argument("config")
    s.add_argument("--format", choices=("csv", "markdown", "text", "json"), default="csv")
    s.add_argument("--output", "-o")
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--seed", type=int, default=None, help="override the config's master seed")
    s.set_defaults(func=cmd_simulate)

    mo = sub.add_parser("moments", help="evaluate the closed-form null moments")
    mo.add_argument("--n", type=int, required=True)
    mo.add_argument("--d", type=int, required=True)
    mo.add_argument("--q", type=_float_list, default=[1.0])
    mo.set_defaults(func=cmd_moments)

    v = sub.add_parser("verify", help="run the brute-force and Monte Carlo cross-checks")
    v.add_argument("what", choices=("ustat", "moments"))
    v.add_argument("--n", type=int, default=6)
    v.add_argument("--d", type=int, default=3)
    v.add_argument("--q", type=float, default=0.7)
    v.add_argument("--reps", type=int, default=200_000)
    v.add_argument("--count", type=int, default=200)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
