"""Command-line front end.

Subcommands::

    iclogcdf fit       --input data.csv  --output fit.json [--eta 1e-10]
    iclogcdf quantile  --input fit.json  --p 0.1 0.5 0.9
    iclogcdf plot-data --input fit.json  --output curve.csv [--grid-points 500]
    iclogcdf simulate  --input scenario.cfg --output report.csv [--seed 0]

Exit codes: 0 success, 2 malformed input, 3 solver non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys

import numpy as np

from .estimator import FitResult, fit, log_F, quantile
from .exceptions import InvalidInterval, NonConvergence, QuantileAboveRange
from .npmle import StepEstimate
from .simharness import Censoring, Law, ReplicateFailure, Scenario, run_scenario

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3


class InputError(Exception):
    pass


def read_intervals_csv(path):
    """Rows of a ``left,right`` CSV as float pairs; ``inf`` marks right censoring."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["left", "right"]:
            raise InputError(f"{path}: line 1: expected header 'left,right'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise InputError(f"{path}: line {lineno}: expected two columns")
            try:
                left, right = float(row[0]), float(row[1])
            except ValueError:
                raise InputError(f"{path}: line {lineno}: non-numeric value in {row!r}") from None
            if not (left >= 0 and left < right) or math.isinf(left):
                raise InputError(f"{path}: line {lineno}: invalid interval ({row[0]}, {row[1]}]")
            rows.append((left, right))
    if not rows:
        raise InputError(f"{path}: no data rows")
    return rows


def read_fit_json(path) -> FitResult:
    try:
        with open(path) as fh:
            return FitResult.from_dict(json.load(fh))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: malformed fit JSON ({exc})") from None


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_fit(args) -> int:
    raw = read_intervals_csv(args.input)
    try:
        res = fit(raw, eta=args.eta)
    except (InvalidInterval, ValueError) as exc:
        raise InputError(str(exc)) from None
    _write(args.output, res.to_json(indent=1) + "\n")
    return EXIT_OK


def cmd_quantile(args) -> int:
    res = read_fit_json(args.input)
    lines = []
    for p in args.p:
        try:
            lines.append(f"{p:g},{quantile(res, p)!r}")
        except QuantileAboveRange:
            lines.append(f"{p:g},nan")
        except ValueError as exc:
            raise InputError(str(exc)) from None
    _write(args.output, "p,t\n" + "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_plot_data(args) -> int:
    res = read_fit_json(args.input)
    if args.grid_points < 2:
        raise InputError("--grid-points must be at least 2")
    t = np.linspace(0.0, res.tau[-1], args.grid_points)
    lf = log_F(res, t)
    F = np.exp(lf)
    un = None if res.F_un is None else StepEstimate(res.tau, res.F_un)(t)
    out = ["t,F_lc,logF_lc,F_un"]
    for i in range(len(t)):
        fu = "" if un is None else repr(float(un[i]))
        out.append(f"{float(t[i])!r},{float(F[i])!r},{float(lf[i])!r},{fu}")
    _write(args.output, "\n".join(out) + "\n")
    return EXIT_OK


def parse_config(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    cfg = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key] = value
    return cfg


def scenario_from_config(cfg: dict, seed: int | None = None) -> Scenario:
    """Build a :class:`Scenario` from parsed config keys.

    ``censoring`` is ``case2 [c1_upper c2_upper]``, ``current_status [rate]``
    or ``current_status_rounded [step]``.  For ``lognormal`` the ``shape`` is
    the log-scale SD and ``scale`` is ``exp(log-scale mean)``.
    """
    try:
        trunc = float(cfg.get("trunc", "inf"))
        law = Law(cfg["law"], float(cfg.get("shape", 1)), float(cfg.get("scale", 1)), trunc)
        parts = cfg.get("censoring", "case2").split()
        kind, extra = parts[0], [float(x) for x in parts[1:]]
        if kind == "case2":
            c1, c2 = extra if extra else (1.0, trunc if math.isfinite(trunc) else 2.0)
            cens = Censoring("case2", c1_upper=c1, c2_upper=c2)
        elif kind == "current_status":
            cens = Censoring(kind, rate=extra[0] if extra else 1.0)
        else:
            cens = Censoring(kind, step=extra[0] if extra else 0.1)
        quantiles = tuple(float(q) for q in cfg.get("quantiles", "0.1,0.3,0.5,0.7,0.9").split(","))
        if seed is None:
            seed = int(cfg.get("seed", 0))
        return Scenario(law, cens, N=int(cfg["N"]), replicates=int(cfg["reps"]), seed=seed, quantiles=quantiles)
    except KeyError as exc:
        raise InputError(f"config is missing key {exc}") from None
    except ValueError as exc:
        raise InputError(f"bad config: {exc}") from None


def cmd_simulate(args) -> int:
    try:
        with open(args.input) as fh:
            cfg = parse_config(fh.read())
    except OSError as exc:
        raise InputError(str(exc)) from None
    sc = scenario_from_config(cfg, args.seed)
    report = run_scenario(sc, eta=args.eta, workers=args.workers)
    _write(args.output, report.to_csv(timing=args.timing))
    if args.output not in (None, "-"):
        sys.stdout.write(report.to_text(timing=args.timing))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iclogcdf", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the log-concave NPMLE to a left,right CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--eta", type=float, default=1e-10)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("quantile", help="quantiles of a fitted estimate")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--p", type=float, nargs="+", required=True)
    p.set_defaults(func=cmd_quantile)

    p = sub.add_parser("plot-data", help="dense curve table for plotting")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--grid-points", type=int, default=500)
    p.set_defaults(func=cmd_plot_data)

    p = sub.add_parser("simulate", help="run a Monte Carlo scenario from a config file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--eta", type=float, default=1e-10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="include (non-deterministic) timing columns")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "eta", 1.0) <= 0:
        print("error: --eta must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NonConvergence, ReplicateFailure) as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
