"""Command-line front end.

Exit codes: 0 success (a rejected null is still success), 2 usage,
3 input or parse error, 4 statistical degeneracy, 5 output I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import re
import sys

from . import __version__
from . import kernel_variance as kv
from . import montecarlo as mc
from .analysis import (
    emit_report,
    ingest_csv,
    run_analysis,
    select_order_aic,
    transform_logdiff,
    write_text,
)
from .errors import HetJBError, UsageError
from .series_model import fit_ar

SEED_ENV = "HETJB_SEED"


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _int_list(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _order(text):
    return text if text == "auto" else int(text)


_TEST_TOKEN = re.compile(r"T_f,boot(?:\([^)]*\))?|[^,]+")


def _tests(text):
    tests = [t.strip() for t in _TEST_TOKEN.findall(text) if t.strip()]
    for t in tests:
        try:
            mc.parse_test(t)
        except HetJBError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return tests


def _add_common(p, formats):
    p.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (0 = all cores)")
    p.add_argument("--format", choices=formats, default=formats[0])
    p.add_argument("-o", "--output", default="-", help="output file (default stdout)")


def _add_grid(p):
    p.add_argument("--grid-cmin", type=float, default=0.2)
    p.add_argument("--grid-cmax", type=float, default=3.0)
    p.add_argument("--grid-points", type=int, default=25)


def _add_input(p):
    p.add_argument("input", help="CSV file")
    p.add_argument("--value-column", default=None)
    p.add_argument("--date-column", default=None)
    p.add_argument("--logdiff", action="store_true", help="analyse 100*log(v_t/v_{t-1})")
    p.add_argument("-p", "--order", type=_order, default="auto", help="AR order or 'auto' (AIC, 0..8)")


def build_parser():
    parser = argparse.ArgumentParser(prog="hetjb", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="normality tests on a CSV series")
    _add_input(p)
    p.add_argument("--tests", type=_tests, default=["T_st", "T_cv", "T_boot"])
    p.add_argument("--gamma", type=float, default=1.0, help="constant of the fixed bandwidth rule")
    p.add_argument("-B", "--replicates", type=int, default=499)
    _add_grid(p)
    _add_common(p, ["text", "json", "csv-plotdata"])

    p = sub.add_parser("simulate", help="draw one series from the AR(1) design")
    p.add_argument("-n", type=int, default=100)
    p.add_argument("--a0", type=float, default=0.4)
    p.add_argument("--variance", choices=sorted(mc.PROFILES), default="homoscedastic")
    p.add_argument("--delta", type=float, default=None, help="mixture innovations with this delta")
    _add_common(p, ["csv"])

    for name, helptext in (("size", "empirical size table"), ("power", "empirical power curve")):
        p = sub.add_parser(name, help=helptext)
        if name == "size":
            p.add_argument("--tests", type=_tests, default=["T_st", "T_cv", "T_boot"])
            p.add_argument("-n", "--n-values", type=_int_list, default=[100, 200, 400, 800])
            p.add_argument("--variance", choices=sorted(mc.PROFILES), default="homoscedastic")
        else:
            p.add_argument("--tests", type=_tests, default=["T_st", "T_boot"])
            p.add_argument("-n", type=int, default=100)
            p.add_argument("--deltas", type=_float_list, default=None)
            p.add_argument("--delta-points", type=int, default=8)
        p.add_argument("--a0", type=float, default=0.4)
        p.add_argument("--gamma", type=float, default=1.0)
        p.add_argument("-N", "--mc-reps", type=int, default=1000)
        p.add_argument("-B", "--replicates", type=int, default=499)
        p.add_argument("--alpha", type=float, default=0.05)
        _add_grid(p)
        _add_common(p, ["text", "json"])

    p = sub.add_parser("bandwidth", help="cross-validation curve for a CSV series")
    _add_input(p)
    _add_grid(p)
    _add_common(p, ["text", "json"])
    return parser


def _cv_rule(args):
    return kv.CvRule(args.grid_cmin, args.grid_cmax, args.grid_points)


def _load(args):
    series = ingest_csv(args.input, args.value_column, args.date_column)
    if args.logdiff:
        return transform_logdiff(series), "100*log-diff"
    return series, None


def cmd_test(args, seed):
    series, transform = _load(args)
    report = run_analysis(
        series, args.order, args.tests, gamma=args.gamma, replicates=args.replicates,
        seed=seed, cv_rule=_cv_rule(args), jobs=args.jobs, transform=transform,
        source=os.path.basename(args.input),
    )
    emit_report(report, args.format, args.output)


def cmd_simulate(args, seed):
    innov = mc.Gaussian() if args.delta is None else mc.Mixture(args.delta)
    series = mc.simulate_dgp(mc.DgpConfig(args.a0, args.n, args.variance, innov, seed))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "value"])
    for i, v in enumerate(series.values, 1):
        w.writerow([i, repr(float(v))])
    write_text(buf.getvalue(), args.output)


def _tests_with_gamma(tests, gamma):
    return [mc.parse_test(t, default_gamma=gamma) for t in tests]


def cmd_size(args, seed):
    report = mc.size_experiment(
        _tests_with_gamma(args.tests, args.gamma), args.n_values, args.mc_reps,
        mc.DgpConfig(a0=args.a0, variance=args.variance), seed,
        replicates=args.replicates, alpha=args.alpha, jobs=args.jobs, cv_rule=_cv_rule(args),
    )
    _emit_mc(report, args)


def cmd_power(args, seed):
    deltas = args.deltas or mc.default_delta_grid(args.delta_points)
    report = mc.power_experiment(
        _tests_with_gamma(args.tests, args.gamma), args.n, deltas, args.mc_reps, seed,
        scenario=mc.DgpConfig(a0=args.a0), replicates=args.replicates, alpha=args.alpha,
        jobs=args.jobs, cv_rule=_cv_rule(args),
    )
    _emit_mc(report, args)


def _emit_mc(report, args):
    if args.format == "json":
        write_text(json.dumps(report.to_dict(), indent=2) + "\n", args.output)
    else:
        write_text(report.to_text() + "\n", args.output)


def cmd_bandwidth(args, seed):
    series, _ = _load(args)
    p = select_order_aic(series)[0] if args.order == "auto" else args.order
    resid = fit_ar(series, p).residuals
    grid = _cv_rule(args).grid(resid.size)
    bs, scores = kv.cv_curve(resid, grid)
    best = kv.select_bandwidth_cv(resid, grid)
    if args.format == "json":
        out = {
            "order": p,
            "m": int(resid.size),
            "bandwidth": list(map(float, bs)),
            "cv": [s if math.isfinite(s) else None for s in map(float, scores)],
            "selected": best,
        }
        write_text(json.dumps(out, indent=2) + "\n", args.output)
        return
    lines = [f"AR order {p}, {resid.size} residuals", f"{'bandwidth':>12}{'cv':>16}"]
    for b, s in zip(bs, scores):
        mark = "  *" if b == best else ""
        lines.append(f"{b:12.5g}{s:16.6g}{mark}")
    write_text("\n".join(lines) + "\n", args.output)


COMMANDS = {
    "test": cmd_test,
    "simulate": cmd_simulate,
    "size": cmd_size,
    "power": cmd_power,
    "bandwidth": cmd_bandwidth,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if getattr(args, "tests", None) is not None and not args.tests:
            raise UsageError("--tests must name at least one test")
        seed = args.seed if args.seed is not None else _default_seed()
        COMMANDS[args.command](args, seed)
    except HetJBError as exc:
        print(f"hetjb: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
