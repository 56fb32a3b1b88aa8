"""Command-line interface: ``jitmed {theory,estimate,simulate,bench}``.

Output is CSV (default) or JSON on stdout. Exit codes: 0 success, 2 usage,
3 input data, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import jitter_theory as jt
from .estimators import (
    CalibrationError,
    ConvergenceError,
    CountSample,
    Method,
    NonEstimableError,
    TukeyConfig,
    estimate,
)
from .simulation import ContaminationConfig, MonteCarloConfig, bench, run_grid

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERIC = 4

HEADERS = {
    "theory.median": ["lambda", "median", "delta", "h_at_frac"],
    "theory.h": ["x", "h"],
    "theory.wn": ["n", "x", "k", "w", "delta_n", "branch"],
    "theory.residual": ["n", "x", "k", "delta_n", "residual"],
    "estimate": ["method", "value", "std_error", "ci95_lo", "ci95_hi", "n", "seed", "iterations"],
    "simulate": [
        "lambda", "estimator", "pi", "sqrt_h", "bias", "rmse", "mean_estimate", "reps_used",
        "failures", "delta_mean", "delta_sd", "qq_slope", "qq_intercept", "wall_time_s",
    ],
}

# full-scale grid and the smaller default used otherwise
FULL_LAMBDAS = np.linspace(1.0, 10.0, 100)
FULL_REPS = 10_000
DESK_LAMBDAS = np.linspace(1.0, 10.0, 20)
DESK_REPS = 2_000
STAR_FLOOR_S = 0.05


class UsageError(Exception):
    pass


class InputDataError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _num(v):
    """Shortest round-trip text for a number; '' for missing."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def emit(command: str, rows: list, fmt: str, out=None, header=None):
    """Write ``rows`` (dicts) as CSV with a fixed header, or as a JSON envelope."""
    out = out or sys.stdout
    header = header or HEADERS[command]
    if fmt == "json":
        payload = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "columns": header,
            "rows": [{h: _json_value(r.get(h)) for h in header} for r in rows],
        }
        json.dump(payload, out, indent=1)
        out.write("\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(r.get(h)) for h in header])


def parse_grid(text: str) -> np.ndarray:
    """``A:B:STEP`` to ``A, A+STEP, ..., B`` (inclusive), or a comma list."""
    try:
        if ":" in text:
            a, b, step = (float(p) for p in text.split(":"))
            if not step > 0 or b < a:
                raise ValueError
            count = int(round((b - a) / step)) + 1
            return a + step * np.arange(count)
        return np.array([float(p) for p in text.split(",") if p.strip()])
    except ValueError:
        raise UsageError(f"bad grid {text!r}; expected A:B:STEP or a comma list") from None


def _parse_sizes(text: str) -> list:
    try:
        return [int(float(p)) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad size list {text!r}") from None


def _parse_methods(text: str) -> tuple:
    if text == "all":
        return tuple(Method)
    try:
        return tuple(Method(p.strip()) for p in text.split(",") if p.strip())
    except ValueError:
        raise UsageError(f"unknown estimator in {text!r}; choose from jittered,mle,median,tukey") from None


def read_counts(path: str) -> CountSample:
    """One nonnegative integer per line, or a single CSV column headed ``count``."""
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise InputDataError("unreadable", f"cannot read {path}: {exc}") from None
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if lines and lines[0].lower() == "count":
        lines = lines[1:]
    if not lines:
        raise InputDataError("empty", f"{path} holds no counts")
    values = []
    for i, ln in enumerate(lines, 1):
        try:
            v = int(ln)
        except ValueError:
            raise InputDataError("not-integer", f"entry {i} ({ln!r}) is not an integer") from None
        if v < 0:
            raise InputDataError("negative", f"entry {i} ({v}) is negative")
        values.append(v)
    return CountSample(np.array(values, dtype=np.int64))


def _threads(arg) -> int:
    if arg is not None:
        return max(1, int(arg))
    env = os.environ.get("JITMED_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"JITMED_THREADS={env!r} is not an integer") from None
    return os.cpu_count() or 1


def cmd_theory(args) -> list:
    if args.action == "median":
        if (args.lam is None) == (args.grid is None):
            raise UsageError("theory median needs exactly one of --lambda or --grid")
        lams = [args.lam] if args.lam is not None else parse_grid(args.grid)
        rows = []
        for lam in lams:
            if not lam > 0:
                raise UsageError("lambda must be positive")
            sol = jt.theoretical_median(float(lam))
            rows.append({"lambda": sol.lam, "median": sol.median, "delta": sol.delta, "h_at_frac": sol.h_at_frac})
        return rows
    if args.action == "h":
        if not 0.0 <= args.x <= 1.0:
            raise UsageError("--x must lie in [0, 1]")
        return [{"x": args.x, "h": jt.h_function(args.x)}]
    if args.action == "wn":
        try:
            p = jt.w_sequence(args.n, args.x, args.k)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return [{"n": p.n, "x": p.x, "k": p.k, "w": p.w, "delta_n": p.delta_n, "branch": p.branch.value}]
    rows = []
    for n in _parse_sizes(args.n_sweep):
        try:
            d = jt.delta_sequence(n, args.x, args.k)
            res = jt.expansion_residual(n, args.x, args.k)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        rows.append({"n": n, "x": args.x, "k": args.k, "delta_n": d, "residual": res})
    return rows


def cmd_estimate(args) -> list:
    sample = read_counts(args.input)
    method = Method(args.method)
    cfg = TukeyConfig(k=args.tukey_k)
    e = estimate(sample, method, seed=args.seed, tukey=cfg)
    lo, hi = e.ci95 if e.ci95 is not None else (None, None)
    return [{
        "method": e.method.value,
        "value": e.value,
        "std_error": e.std_error,
        "ci95_lo": lo,
        "ci95_hi": hi,
        "n": sample.n,
        "seed": args.seed if method is Method.JITTERED or method is Method.TUKEY else None,
        "iterations": e.iterations,
    }]


def cmd_simulate(args) -> list:
    if args.lambdas is not None:
        lambdas = parse_grid(args.lambdas)
    else:
        lambdas = FULL_LAMBDAS if args.full_scale else DESK_LAMBDAS
    reps = args.reps if args.reps is not None else (FULL_REPS if args.full_scale else DESK_REPS)
    if args.pi < 0 or args.pi >= 1:
        raise UsageError("--pi must lie in [0, 1)")
    cont = None
    if args.pi > 0:
        if args.snr is not None:
            cont = ContaminationConfig(pi=args.pi, snr_target_db=args.snr)
        elif args.sqrt_h is not None:
            cont = ContaminationConfig(pi=args.pi, sqrt_h=args.sqrt_h)
        else:
            raise UsageError("--pi > 0 needs --snr or --sqrt-h")
    try:
        cfg = MonteCarloConfig(
            lambdas=tuple(lambdas),
            n=args.n,
            reps=reps,
            master_seed=args.seed,
            estimators=_parse_methods(args.estimators),
            contamination=cont,
            tukey=TukeyConfig(k=args.tukey_k),
            threads=_threads(args.threads),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = run_grid(cfg)
    rows = []
    for r in report.rows:
        nm = r.normality or {}
        rows.append({
            "lambda": r.lam, "estimator": r.estimator.value, "pi": r.pi, "sqrt_h": r.sqrt_h,
            "bias": r.bias, "rmse": r.rmse, "mean_estimate": r.mean_estimate,
            "reps_used": r.reps_used, "failures": r.failures,
            "delta_mean": nm.get("mean"), "delta_sd": nm.get("sd"),
            "qq_slope": nm.get("qq_slope"), "qq_intercept": nm.get("qq_intercept"),
            "wall_time_s": r.wall_time_s,
        })
    return rows


def cmd_bench(args):
    sizes = _parse_sizes(args.sizes)
    if not sizes or sizes != sorted(sizes) or sizes[0] < 1:
        raise UsageError("--sizes must be positive and ascending")
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    table = bench(
        sizes,
        lam=args.lam,
        methods=_parse_methods(args.methods),
        reps=args.reps,
        memory_budget_bytes=args.memory_budget_gb * 1e9,
        seed=args.seed,
    )
    header = ["method"] + [_num(n) for n in sizes]
    rows = []
    for m in dict.fromkeys(r.method for r in table.rows):
        row = {"method": m.value}
        for n in sizes:
            t = table.time(m, n)
            if t is None:
                row[_num(n)] = "NA"
            elif args.star_floor and t < STAR_FLOOR_S:
                row[_num(n)] = "0*"
            else:
                row[_num(n)] = t
        rows.append(row)
    return rows, header


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jitmed", description="Jittered-median estimation of a Poisson intensity.")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = p.add_subparsers(dest="command", required=True)

    th = sub.add_parser("theory", help="exact median of N+U, H(x), w_n and Delta_n")
    tsub = th.add_subparsers(dest="action", required=True)
    med = tsub.add_parser("median")
    med.add_argument("--lambda", dest="lam", type=float)
    med.add_argument("--grid", help="A:B:STEP")
    h = tsub.add_parser("h")
    h.add_argument("--x", type=float, required=True)
    wn = tsub.add_parser("wn")
    wn.add_argument("--n", type=int, required=True)
    wn.add_argument("--x", type=float, required=True)
    wn.add_argument("--k", type=float, required=True)
    res = tsub.add_parser("residual")
    res.add_argument("--x", type=float, required=True)
    res.add_argument("--k", type=float, required=True)
    res.add_argument("--n-sweep", required=True, help="N1,N2,...")

    es = sub.add_parser("estimate", help="estimate lambda from a file of counts")
    es.add_argument("--input", required=True, help="file path, or - for stdin")
    es.add_argument("--method", choices=[m.value for m in Method], default="jittered")
    es.add_argument("--seed", type=int, default=0)
    es.add_argument("--tukey-k", type=float, default=6.0)

    si = sub.add_parser("simulate", help="Monte Carlo bias/RMSE grid")
    si.add_argument("--lambdas", help="A:B:STEP or comma list")
    si.add_argument("--n", type=int, default=200)
    si.add_argument("--reps", type=int)
    si.add_argument("--pi", type=float, default=0.0)
    si.add_argument("--snr", type=float, help="target SNR in dB used to set sqrt(h)")
    si.add_argument("--sqrt-h", type=int)
    si.add_argument("--estimators", default="jittered,mle,median")
    si.add_argument("--seed", type=int, default=0)
    si.add_argument("--tukey-k", type=float, default=6.0)
    si.add_argument("--threads", type=int)
    si.add_argument("--full-scale", action="store_true", help="100 intensities in [1, 10], 10000 reps")

    be = sub.add_parser("bench", help="mean wall time per estimator and sample size")
    be.add_argument("--sizes", default="1e4,1e5,1e6")
    be.add_argument("--lambda", dest="lam", type=float, default=math.pi)
    be.add_argument("--reps", type=int, default=10)
    be.add_argument("--methods", default="all")
    be.add_argument("--memory-budget-gb", type=float, default=4.0)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--star-floor", action="store_true", help="print 0* for times under 0.05 s")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        header = None
        if args.command == "theory":
            rows = cmd_theory(args)
            command = f"theory.{args.action}"
        elif args.command == "estimate":
            rows = cmd_estimate(args)
            command = "estimate"
        elif args.command == "simulate":
            rows = cmd_simulate(args)
            command = "simulate"
        else:
            rows, header = cmd_bench(args)
            command = "bench"
        emit(command, rows, args.format, header=header)
        return EXIT_OK
    except UsageError as exc:
        print(f"jitmed: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputDataError as exc:
        print(f"jitmed: input error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (CalibrationError, ConvergenceError, NonEstimableError) as exc:
        print(f"jitmed: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"jitmed: input error [invalid]: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
