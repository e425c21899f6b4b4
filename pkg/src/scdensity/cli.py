"""Command-line interface: ``scdensity <command> ...``.

Exit codes: 0 on success, 2 for invalid input or flags, 3 when a numerical
computation fails.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from contextlib import contextmanager

import numpy as np

from . import bench, distributions, ecf, kernels, sc, theory
from .errors import InvalidInput, NumericalFailure
from .model import Sample

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
METHODS = ("sc", "kg", "kt", "apt", "opt")


def read_sample(path: str) -> Sample:
    """One float per line; blank lines and ``#`` comments are skipped."""
    values = []
    with (sys.stdin if path == "-" else open(path)) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                v = float(line)
            except ValueError:
                raise InvalidInput(f"line {lineno}: cannot parse {line!r} as a number") from None
            if not math.isfinite(v):
                raise InvalidInput(f"NonFiniteValue on line {lineno}: {line!r}")
            values.append(v)
    return Sample(np.array(values))


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _x_range(args, sample: Sample):
    lo, hi = sc.default_x_range(sample)
    lo = args.x_min if args.x_min is not None else lo
    hi = args.x_max if args.x_max is not None else hi
    return lo, hi, args.x_count if args.x_count is not None else sc.DEFAULT_X_COUNT


def cmd_estimate(args) -> int:
    sample = read_sample(args.input)
    if args.method == "sc":
        config = sc.ScConfig(args.half_fraction, args.tstar, args.correct_negative)
        x_range = None
        if args.x_min is not None or args.x_max is not None:
            x_range = _x_range(args, sample)[:2]
        curve, _, diag = sc.sc_estimate(
            sample, config, x_range=x_range, x_count=args.x_count,
            points_per_side=args.points_per_side, padding=args.padding)
        if args.diagnostics:
            keys = ("n", "dt", "t_star", "threshold", "accepted_count", "negative_mass")
            bench.write_csv(args.diagnostics, ("key", "value"), [(k, diag[k]) for k in keys])
    elif args.method == "apt":
        curve = kernels.adaptive_estimate(sample, _x_range(args, sample))
    else:
        grid = ecf.default_grid(sample, args.points_per_side, args.padding)
        table = ecf.ecf_evaluate(sample, grid)
        if args.method == "kg":
            spec = kernels.KernelSpec("gaussian", kernels.kg_bandwidth(sample))
        elif args.method == "kt":
            spec = kernels.KernelSpec("flat_top", kernels.kt_bandwidth(table, sample.n, args.c2))
        else:
            if args.dist is None:
                raise InvalidInput("--method opt needs --dist for the reference spectrum")
            spec = kernels.KernelSpec("optimal_oracle", dist=distributions.get(args.dist))
        curve = kernels.kernel_estimate(sample, spec, _x_range(args, sample), ecf=table)
    with _output(args.output) as fh:
        bench.write_csv(fh, ("x", "f"), zip(curve.x, curve.f))
    return EXIT_OK


def cmd_ecf(args) -> int:
    sample = read_sample(args.input)
    table = ecf.ecf_evaluate(sample, ecf.default_grid(sample, args.points_per_side, args.padding))
    with _output(args.output) as fh:
        bench.write_csv(fh, ("t", "re", "im", "abs2"),
                        zip(table.t, table.values.real, table.values.imag, table.abs2))
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.n < 1:
        raise InvalidInput(f"--n must be positive, got {args.n}")
    dist = distributions.get(args.dist)
    values = dist._draw(distributions.replicate_rng(args.seed), args.n)
    with _output(args.output) as fh:
        fh.writelines("%.17g\n" % v for v in values)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    n_list = bench.FULL_N_LIST if args.full else (args.n_list or bench.DEFAULT_N_LIST)
    plan = bench.BenchmarkPlan(args.dist, tuple(args.estimators), tuple(n_list),
                               args.reps, args.seed, args.ise_method)
    rows = bench.record_rows(bench.run_benchmark(plan, args.threads))
    if args.theory:
        rows += bench.theory_rows(args.dist, plan.n_list, args.seed)
    with _output(args.output) as fh:
        bench.write_csv(fh, bench.CSV_HEADER, rows)
    return EXIT_OK


def cmd_theory(args) -> int:
    dist = distributions.get(args.dist)
    rows = [(n, theory.reference_value(dist, args.bound, n)) for n in args.n_list]
    with _output(args.output) as fh:
        bench.write_csv(fh, ("n", "value"), rows)
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    rows = bench.sensitivity_study(args.dist, args.n, args.reps, args.factors,
                                   args.seed, args.points_per_side)
    for row in rows:
        for r, msg in row.failures:
            print(f"factor {row.factor:g}, replicate {r}: {msg}", file=sys.stderr)
    with _output(args.output) as fh:
        bench.write_csv(fh, ("factor", "mean_change", "stderr", "ok", "failed"),
                        [(r.factor, r.mean_change, r.stderr, r.ok, len(r.failures)) for r in rows])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scdensity", description="Self-consistent spectral density estimation.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="estimate a density from a sample file")
    e.add_argument("--input", required=True, help="one value per line, '-' for stdin")
    e.add_argument("--output", help="CSV file (default stdout)")
    e.add_argument("--method", choices=METHODS, default="sc")
    e.add_argument("--dist", choices=distributions.names(), help="reference density for --method opt")
    e.add_argument("--x-min", type=float)
    e.add_argument("--x-max", type=float)
    e.add_argument("--x-count", type=int)
    e.add_argument("--half-fraction", type=float, default=0.5)
    e.add_argument("--tstar", type=float, help="fixed frequency cutoff")
    e.add_argument("--correct-negative", action="store_true",
                   help="shift the estimate down and clip it so it is a proper density")
    e.add_argument("--c2", type=float, default=1.0, help="level constant for --method kt")
    e.add_argument("--grid-points", "--points-per-side", dest="points_per_side", type=int,
                   default=ecf.DEFAULT_POINTS_PER_SIDE, help="frequency nodes per side")
    e.add_argument("--padding", type=float, default=ecf.DEFAULT_PADDING)
    e.add_argument("--diagnostics", help="CSV of key,value run diagnostics (--method sc)")
    e.set_defaults(func=cmd_estimate)

    c = sub.add_parser("ecf", help="tabulate the empirical characteristic function")
    c.add_argument("--input", required=True)
    c.add_argument("--output")
    c.add_argument("--grid-points", "--points-per-side", dest="points_per_side", type=int,
                   default=ecf.DEFAULT_POINTS_PER_SIDE)
    c.add_argument("--padding", type=float, default=ecf.DEFAULT_PADDING)
    c.set_defaults(func=cmd_ecf)

    s = sub.add_parser("sample", help="draw a seeded sample from a reference density")
    s.add_argument("--dist", required=True, choices=distributions.names())
    s.add_argument("--n", required=True, type=int)
    s.add_argument("--seed", required=True, type=int)
    s.add_argument("--output")
    s.set_defaults(func=cmd_sample)

    b = sub.add_parser("benchmark", help="Monte Carlo MISE for a set of estimators")
    b.add_argument("--dist", required=True, choices=sorted(bench.SETTINGS))
    b.add_argument("--estimators", type=_str_list, default=["sc", "kg"])
    sizes = b.add_mutually_exclusive_group()
    sizes.add_argument("--n-list", type=_int_list)
    sizes.add_argument("--full", action="store_true",
                       help="sample sizes up to 10^6 (hours of CPU time)")
    b.add_argument("--reps", type=int, default=100)
    b.add_argument("--seed", required=True, type=int)
    b.add_argument("--ise-method", choices=bench.ISE_METHODS, default="real_space")
    b.add_argument("--threads", type=int, help="worker threads (default SCD_THREADS or all cores)")
    b.add_argument("--theory", action="store_true", help="append reference rows from closed forms")
    b.add_argument("--output")
    b.set_defaults(func=cmd_benchmark)

    t = sub.add_parser("theory", help="reference MISE curves")
    t.add_argument("--dist", required=True, choices=sorted(bench.SETTINGS))
    t.add_argument("--bound", required=True, choices=theory.BOUNDS)
    t.add_argument("--n-list", required=True, type=_int_list)
    t.add_argument("--output")
    t.set_defaults(func=cmd_theory)

    v = sub.add_parser("sensitivity", help="change of the SC estimate under scaled t*")
    v.add_argument("--dist", required=True, choices=sorted(bench.SETTINGS))
    v.add_argument("--n", required=True, type=int)
    v.add_argument("--reps", type=int, default=50)
    v.add_argument("--factors", type=_float_list, default=[0.5, 1.5])
    v.add_argument("--seed", required=True, type=int)
    v.add_argument("--points-per-side", type=int)
    v.add_argument("--output")
    v.set_defaults(func=cmd_sensitivity)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = args.func(args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return code
    except (InvalidInput, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
