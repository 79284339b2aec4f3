"""``markovdep`` command line.

Exit status: 0 success, 2 usage or configuration error, 3 I/O error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings

from . import copulas as cop
from .analysis import SCHEMA_VERSION, analyze
from .dataio import (
    curves_to_csv_rows,
    dumps,
    load_csv,
    load_study_config,
    parse_knots,
    write_dataset_csv,
    write_rows,
    write_text,
)
from .errors import ConfigError, DataIOError, InputError, NumericError
from .estimator import KAPPA, PHI, default_grid, estimate_gaps, identity_check, kappa_curve, phi_curve
from .ranks import TieRule
from .reference import DEFAULT_MC_SAMPLES, reference_curve
from .study import run_study

log = logging.getLogger("markovdep")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def _add_spec_args(p):
    p.add_argument("family", choices=sorted(cop._NAMES.values()), help="copula family")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--d", type=int, default=None, help="Gaussian predictor dimension (default 1)")
    p.add_argument("--m", type=int)
    p.add_argument("--knots", type=parse_knots, help="LSL diagonal knots, e.g. '0:0,0.5:0.35,1:1'")


def _spec(args):
    return cop.spec_from_dict(
        {
            "family": args.family,
            "alpha": args.alpha,
            "beta": args.beta,
            "rho": args.rho,
            "d": args.d,
            "m": args.m,
            "knots": args.knots,
        }
    )


def _kinds(choice):
    return (PHI, KAPPA) if choice == "both" else (choice,)


def _emit(text, out):
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        data = load_csv(args.csv, args.y, args.x)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    rule = TieRule.by_index() if args.tie_rule == "index" else TieRule.random(args.seed)
    report = analyze(data, rule, default_grid(args.grid_points), nn_method=args.nn_method, b_n=args.b_n)
    _emit(dumps(report.to_dict()) + "\n", args.out)
    if args.curves_csv:
        write_rows(args.curves_csv, curves_to_csv_rows([report.phi_curve, report.kappa_curve]))
    return EXIT_OK


def cmd_sample(args) -> int:
    data = cop.sample_joint(_spec(args), args.n, args.seed)
    if args.out:
        write_dataset_csv(data, args.out)
    else:
        import csv

        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["y"] + [f"x{j + 1}" for j in range(data.d)])
        for yi, xi in zip(data.y, data.x):
            writer.writerow([repr(float(yi))] + [repr(float(v)) for v in xi])
    return EXIT_OK


def cmd_curve(args) -> int:
    spec = _spec(args)
    grid = default_grid(args.grid_points)
    curves, labels = [], []
    if args.mode in ("estimate", "both"):
        if args.n is None:
            raise ConfigError("estimate mode needs -n")
        gaps = estimate_gaps(cop.sample_joint(spec, args.n, args.seed))
        for kind in _kinds(args.kind):
            curves.append(phi_curve(gaps, grid) if kind == PHI else kappa_curve(gaps, grid))
            labels.append("estimated")
    if args.mode in ("reference", "both"):
        for kind in _kinds(args.kind):
            curves.append(reference_curve(spec, kind, grid, mc_samples=args.mc_samples, seed=args.seed))
            labels.append("reference")
    if args.format == "csv":
        import csv
        import io

        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(curves_to_csv_rows(curves, labels))
        _emit(buf.getvalue(), args.out)
    else:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "spec": cop.spec_to_dict(spec),
            "seed": args.seed,
            "curves": [dict(c.to_dict(), role=label) for c, label in zip(curves, labels)],
        }
        _emit(dumps(payload) + "\n", args.out)
    return EXIT_OK


def cmd_study(args) -> int:
    config = load_study_config(args.config)
    log.info("running %d cells", len(config.sample_sizes) * config.repetitions)
    result = run_study(config, workers=args.workers)
    _emit(dumps(result.to_dict()) + "\n", args.out_json)
    if args.out_csv:
        write_text(args.out_csv, result.to_csv())
    return EXIT_OK


def cmd_check_identity(args) -> int:
    spec = _spec(args)
    sample = cop.sample_markov_product(spec, args.n, args.seed, method=args.method)
    check = identity_check(sample.pairs)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "spec": cop.spec_to_dict(spec),
        "samples": args.n,
        "seed": args.seed,
        "method": sample.method,
        **check.to_dict(),
    }
    _emit(dumps(payload) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="markovdep", description="Rank-based phi/kappa dependence estimation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="estimate phi, kappa and xi from a CSV file")
    p.add_argument("--csv", required=True)
    p.add_argument("--y", required=True, help="response column")
    p.add_argument("--x", required=True, nargs="+", help="predictor column(s)")
    p.add_argument("--tie-rule", choices=("index", "random"), default="random")
    p.add_argument("--seed", type=int, default=0, help="seed for random tie breaking")
    p.add_argument("--grid-points", type=int, default=101)
    p.add_argument("--b-n", type=float, default=None, help="near-zero threshold (default 1/n)")
    p.add_argument("--nn-method", choices=("auto", "brute", "kdtree"), default="auto")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--curves-csv", help="also write both curves as CSV")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sample", help="draw a joint sample to CSV")
    _add_spec_args(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("curve", help="reference and/or estimated curves")
    _add_spec_args(p)
    p.add_argument("--kind", choices=(PHI, KAPPA, "both"), default="both")
    p.add_argument("--mode", choices=("reference", "estimate", "both"), default="reference")
    p.add_argument("-n", type=int, help="sample size for estimate mode")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-points", type=int, default=101)
    p.add_argument("--mc-samples", type=int, default=DEFAULT_MC_SAMPLES)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("study", help="run a convergence study from a config file")
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-json")
    p.add_argument("--out-csv")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("check-identity", help="compare two rank-correlation representations")
    _add_spec_args(p)
    p.add_argument("-n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("auto", "analytic", "conditional"), default="auto")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_identity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except DataIOError as exc:
        print(f"markovdep: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericError as exc:
        print(f"markovdep: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, InputError) as exc:
        print(f"markovdep: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
