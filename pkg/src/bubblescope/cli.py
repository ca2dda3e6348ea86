"""Command-line entry point: ``bubblescope <command> ...``.

Exit codes: 0 success (or a Valid bubble diagnosis), 2 a clean NoBubble
diagnosis from ``fit``, 1 any error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .calibrate import VALID, FitConfig, calibrate_ensemble, critical_window, diagnose, scan, valid_fraction
from .leadlag import difference, lag_scan, standardize
from .model import lppls_value
from .reflexivity import HawkesConfig, events_to_csv, fit_hawkes, ingest_events, simulate_hawkes
from .report import Report, sha256_of
from .series import TimeSeries, align, ingest_csv, parse_time, to_csv, to_log
from .synthetic import SynthSpec, generate_lppls

EXIT_OK, EXIT_ERROR, EXIT_NO_BUBBLE = 0, 1, 2

log = logging.getLogger("bubblescope")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is reserved for NoBubble
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    env = os.environ.get("BUBBLESCOPE_SEED")
    return int(env) if env else 0


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
        return v
    return conv


def _fit_flags(p):
    p.add_argument("--windows", type=int, default=5, help="ensemble size (>= 3)")
    p.add_argument("--starts", type=_positive(int), default=50)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--tc-max-frac", type=_positive(float), default=0.5)
    p.add_argument("--m-bounds", type=float, nargs=2, default=(0.1, 0.9), metavar=("LO", "HI"))
    p.add_argument("--omega-bounds", type=float, nargs=2, default=(2.0, 25.0), metavar=("LO", "HI"))
    p.add_argument("--bootstrap", type=int, default=20, help="bootstrap refits per Valid window")
    p.add_argument("--confidence", type=float, default=0.8)
    p.add_argument("--min-valid-fraction", type=float, default=0.8,
                   help="share of Valid windows needed for a bubble verdict")


def _config(args) -> FitConfig:
    return FitConfig(
        tc_max_frac=args.tc_max_frac,
        m_bounds=tuple(args.m_bounds),
        omega_bounds=tuple(args.omega_bounds),
        starts=args.starts,
        seed=args.seed,
        bootstrap=args.bootstrap,
    )


def _read_bytes(path) -> bytes:
    return Path(path).read_bytes()


def _emit(args, report: Report, table: str | None = None):
    if args.format == "csv" and table is not None:
        sys.stdout.write(table)
    else:
        sys.stdout.write(report.to_json() + "\n")


def _write(outdir: Path, name: str, text: str, artifacts: list):
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / name
    path.write_text(text)
    artifacts.append(str(path))


def _curves_csv(series: TimeSeries, ensemble) -> str:
    logp = to_log(series)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time", "log_price"] + [f"fit_{i}" for i in range(len(ensemble))])
    for t, y in zip(logp.times, logp.values):
        row = [f"{t:.6f}", repr(float(y))]
        for f in ensemble:
            t1, t2 = f.window
            inside = t1 <= t <= t2 and np.isfinite(f.params.tc) and t < f.params.tc
            row.append(repr(float(lppls_value(f.params, t))) if inside else "")
        w.writerow(row)
    return buf.getvalue()


def _band_csv(window) -> str:
    if window is None:
        return "lower,upper,confidence\n"
    return f"lower,upper,confidence\n{window.lower!r},{window.upper!r},{window.confidence!r}\n"


def cmd_ingest(args) -> int:
    raw = _read_bytes(args.csv)
    series = ingest_csv(raw.decode())
    report = Report(
        "ingest",
        sha256_of(raw),
        {},
        {"n_points": len(series), "start": series.times[0], "end": series.times[-1]},
    )
    _emit(args, report, to_csv(series))
    return EXIT_OK


def cmd_fit(args) -> int:
    raw = _read_bytes(args.csv)
    series = ingest_csv(raw.decode(), label=str(args.csv))
    if args.as_of is not None:
        series = series.truncate(parse_time(args.as_of))
    config = _config(args)
    ensemble = calibrate_ensemble(series, config, args.windows)
    status = diagnose(ensemble, args.min_valid_fraction)
    window = critical_window(ensemble, args.confidence) if status == VALID else None

    artifacts = []
    if args.out:
        out = Path(args.out)
        _write(out, "fit_curves.csv", _curves_csv(series, ensemble), artifacts)
        _write(out, "fit_band.csv", _band_csv(window), artifacts)
    report = Report(
        "fit",
        sha256_of(raw),
        {**config.to_dict(), "windows": args.windows, "as_of": series.times[-1],
         "confidence": args.confidence, "min_valid_fraction": args.min_valid_fraction},
        {
            "status": status,
            "valid_fraction": valid_fraction(ensemble),
            "critical_window": None if window is None else window.to_dict(),
            "fits": [f.to_dict() for f in ensemble],
        },
        artifacts,
    )
    if args.out:
        (Path(args.out) / "fit_report.json").write_text(report.to_json() + "\n")
    _emit(args, report, _curves_csv(series, ensemble))
    return EXIT_OK if status == VALID else EXIT_NO_BUBBLE


def _scan_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["as_of", "status", "lower", "upper", "valid_fraction", "message"])
    for r in rows:
        lo = "" if r.window is None else repr(r.window.lower)
        hi = "" if r.window is None else repr(r.window.upper)
        w.writerow([f"{r.as_of:.6f}", r.status, lo, hi, repr(r.valid_fraction), r.message])
    return buf.getvalue()


def cmd_scan(args) -> int:
    raw = _read_bytes(args.csv)
    series = ingest_csv(raw.decode(), label=str(args.csv))
    config = _config(args)
    rows = scan(series, config, args.step, args.windows, args.confidence, args.min_valid_fraction)
    table = _scan_csv(rows)
    artifacts = []
    if args.out:
        _write(Path(args.out), "scan.csv", table, artifacts)
    report = Report(
        "scan",
        sha256_of(raw),
        {**config.to_dict(), "windows": args.windows, "step": args.step,
         "confidence": args.confidence, "min_valid_fraction": args.min_valid_fraction},
        {"rows": [r.to_dict() for r in rows]},
        artifacts,
    )
    _emit(args, report, table)
    return EXIT_OK


def cmd_leadlag(args) -> int:
    raw_a, raw_b = _read_bytes(args.csv_a), _read_bytes(args.csv_b)
    a = ingest_csv(raw_a.decode(), label=str(args.csv_a))
    b = ingest_csv(raw_b.decode(), label=str(args.csv_b))
    t, va, vb = align(a, b, "interpolate_onto_a")
    a, b = TimeSeries(t, va, a.label), TimeSeries(t, vb, b.label)
    if args.difference in ("a", "both"):
        a = difference(a)
    if args.difference in ("b", "both"):
        b = difference(b)
    if len(a) != len(b):
        # only one side was differenced; drop the first point of the other
        a, b = (a.slice(1), b) if len(a) > len(b) else (a, b.slice(1))
    result = lag_scan(standardize(a), standardize(b), args.max_lag,
                      differenced=args.difference != "none")
    artifacts = []
    if args.out:
        _write(Path(args.out), "leadlag_curve.csv", result.to_csv(), artifacts)
    report = Report(
        "leadlag",
        sha256_of(raw_a, raw_b),
        {"max_lag": args.max_lag, "difference": args.difference, "align": "interpolate_onto_a"},
        result.to_dict(),
        artifacts,
    )
    _emit(args, report, result.to_csv())
    return EXIT_OK


def cmd_reflexivity(args) -> int:
    raw = _read_bytes(args.csv)
    events = ingest_events(raw.decode(), horizon=args.horizon)
    config = HawkesConfig(starts=args.starts, seed=args.seed)
    fit = fit_hawkes(events, config)
    report = Report(
        "reflexivity",
        sha256_of(raw),
        {"starts": config.starts, "seed": config.seed, "horizon": events.horizon,
         "kernel": "exponential"},
        {**fit.to_dict(), "n_events": len(events)},
    )
    _emit(args, report)
    return EXIT_OK


def cmd_synth(args) -> int:
    raw = _read_bytes(args.spec)
    try:
        spec = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid spec JSON: {exc}") from None
    kind = spec.get("kind", "lppls")
    if kind == "lppls":
        text = to_csv(generate_lppls(SynthSpec.from_dict(spec)))
    elif kind == "hawkes":
        events = simulate_hawkes(float(spec["mu"]), float(spec["alpha"]), float(spec["beta"]),
                                 float(spec["horizon"]), int(spec.get("seed", 0)))
        text = events_to_csv(events)
    else:
        raise ValueError(f"unknown synth kind {kind!r}")
    Path(args.output).write_text(text)
    report = Report("synth", sha256_of(raw), spec, {"kind": kind}, [str(args.output)])
    _emit(args, report)
    return EXIT_OK


def cmd_report(args) -> int:
    text = Path(args.report).read_text()
    report = Report.from_json(text)
    if Report.from_json(report.to_json()).to_dict() != report.to_dict():
        raise ValueError("report does not round-trip through its schema")
    _emit(args, report)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bubblescope", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.set_defaults(func=func)
        return p

    p = add("ingest", cmd_ingest, "parse and normalise a date,value CSV")
    p.add_argument("csv")

    p = add("fit", cmd_fit, "calibrate a window ensemble and estimate the critical window")
    p.add_argument("csv")
    p.add_argument("--as-of", help="last observation used (ISO date or decimal year)")
    p.add_argument("--out", help="directory for report and plot-data files")
    _fit_flags(p)

    p = add("scan", cmd_scan, "causal rolling diagnosis")
    p.add_argument("csv")
    p.add_argument("--step", type=_positive(float), required=True, help="years between rows")
    p.add_argument("--out")
    _fit_flags(p)

    p = add("leadlag", cmd_leadlag, "lagged correlation between two series")
    p.add_argument("csv_a")
    p.add_argument("csv_b")
    p.add_argument("--max-lag", type=int, default=12)
    p.add_argument("--difference", nargs="?", const="both", default="none",
                   choices=("none", "a", "b", "both"))
    p.add_argument("--out")

    p = add("reflexivity", cmd_reflexivity, "fit a self-excited process to event times")
    p.add_argument("csv")
    p.add_argument("--horizon", type=float)
    p.add_argument("--starts", type=_positive(int), default=8)
    p.add_argument("--seed", type=int, default=_default_seed())

    p = add("synth", cmd_synth, "generate synthetic data from a JSON spec")
    p.add_argument("spec")
    p.add_argument("output")

    p = add("report", cmd_report, "validate and print a saved report")
    p.add_argument("report")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
