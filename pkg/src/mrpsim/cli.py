"""Command line entry point: ``mrpsim run | batch | paper-suite``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from mrpsim.errors import MrpSimError
from mrpsim.scenario import (
    bundled_scenarios,
    format_summary_table,
    load_scenario,
    run_batch,
    run_scenario,
    write_trajectory_csv,
)


def _export(results, out_dir):
    if out_dir is None:
        return
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for r in results:
        if r.trajectory is not None:
            write_trajectory_csv(r.trajectory, out / f"{r.scenario}.csv")


def _report(results, out_dir) -> int:
    print(format_summary_table(results))
    _export(results, out_dir)
    failed = [r for r in results if r.summary.error]
    for r in failed:
        print(f"error: {r.scenario}: {r.summary.error}", file=sys.stderr)
    return 1 if failed else 0


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    if args.horizon is not None:
        sc = sc.with_horizon(args.horizon)
    return _report([run_scenario(sc)], args.out)


def cmd_batch(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        raise MrpSimError(f"{directory}: not a directory")
    files = sorted(directory.glob("*.cfg"))
    if not files:
        raise MrpSimError(f"{directory}: no *.cfg scenario files")
    scenarios = [load_scenario(f) for f in files]
    if args.horizon is not None:
        scenarios = [s.with_horizon(args.horizon) for s in scenarios]
    return _report(run_batch(scenarios, args.jobs), args.out)


def cmd_paper_suite(args) -> int:
    scenarios = bundled_scenarios()
    if args.horizon is not None:
        scenarios = [s.with_horizon(args.horizon) for s in scenarios]
    return _report(run_batch(scenarios, args.jobs), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrpsim",
        description="Delayed-feedback MRP attitude simulator with shadow-set switching rules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario file")
    p.add_argument("scenario")
    p.add_argument("--out", help="directory for telemetry CSV files")
    p.add_argument("--horizon", type=float, help="override the scenario horizon [s]")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("batch", help="run every *.cfg in a directory")
    p.add_argument("directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--horizon", type=float)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("paper-suite", help="run the five bundled reference scenarios")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--horizon", type=float)
    p.set_defaults(func=cmd_paper_suite)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MrpSimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
