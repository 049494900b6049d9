"""Command line entry point: run, sweep, validate, plot."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_sim, load_sweep, parse_text, read_config_file

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _out_dir(text: str, override: str | None) -> Path:
    if override:
        return Path(override)
    return Path(parse_text(text).get("out.dir", "out"))


def cmd_run(args) -> int:
    from .euler_solver import run_euler
    from .io import write_csv, write_snapshot
    from .ns_solver import run_ns

    text = read_config_file(args.config)
    sim = load_sim(text)
    out = _out_dir(text, args.out)
    traj = run_euler(sim) if args.solver == "euler" else run_ns(sim)
    out.mkdir(parents=True, exist_ok=True)
    for k, (t, f) in enumerate(zip(traj.times, traj.snapshots)):
        write_snapshot(f, t, out / f"snapshot_{k:03d}.axv")
    cols = tuple(traj.series)
    rows = [{c: traj.series[c][i] for c in cols} for i in range(len(traj.series["t"]))]
    write_csv(rows, out / "budget.csv", cols)
    print(f"{traj.steps} steps, {len(traj.times)} snapshots written to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .sweep import run_sweep

    text = read_config_file(args.config)
    cfg = load_sweep(text)
    if args.workers:
        from dataclasses import replace

        cfg = replace(cfg, workers=args.workers)
    out = _out_dir(text, args.out)
    report = run_sweep(cfg, out_dir=out, log=lambda m: print(m, flush=True))
    print((out / "summary.txt").read_text(), end="")
    return EXIT_FAIL if any(r.failed for r in report.rows) else EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_suite

    checks = run_suite(quick=not args.full)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def cmd_plot(args) -> int:
    from .sweep import plot_report_files

    csv_path = Path(args.csv)
    if not csv_path.is_file():
        raise ConfigError(f"no such report: {csv_path}")
    out = Path(args.out) if args.out else csv_path.parent
    out.mkdir(parents=True, exist_ok=True)
    for p in plot_report_files(csv_path, out):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="axivisc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="one simulation: snapshots and a per-step budget CSV")
    p.add_argument("config")
    p.add_argument("--solver", choices=("ns", "euler"), default="ns")
    p.add_argument("--out", help="override out.dir")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", help="viscosity ladder against the inviscid reference")
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=0, help="override sweep.workers")
    p.add_argument("--out", help="override out.dir")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("validate", help="analytic self-checks, prints a pass/fail table")
    p.add_argument("--full", action="store_true", help="use the 128x256 resolution")
    p.set_defaults(func=cmd_validate)
    p = sub.add_parser("plot", help="re-render SVG plots from a report CSV")
    p.add_argument("csv")
    p.add_argument("--out", help="directory for the SVG files (default: next to the CSV)")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, FloatingPointError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
