"""``plan-bench`` command line entry point."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .experiments import (COMPARE_HEADER, ExperimentSpec, compare, format_rows, load_aggregate,
                          make_planner, run_experiment)
from .simulator import Clock, Mode, load_scenario, run_simulation, trace_csv


def _samples(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sample list {text!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plan-bench", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="run one experiment grid for one planner")
    run.add_argument("--experiment", type=int, choices=(1, 2, 3), required=True)
    run.add_argument("--env", choices=("maze", "mine"), required=True)
    run.add_argument("--planner", choices=("rtfmt", "rtrrt"), required=True)
    run.add_argument("--samples", type=_samples, default=(500, 1500, 2500, 3500, 4500),
                     help="comma separated; free-space samples for rtfmt, "
                          "sample-and-extend attempts for rtrrt")
    run.add_argument("--repeats", type=int, default=50)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--clock", choices=[c.value for c in Clock], default=Clock.VIRTUAL.value)
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--out", type=Path, required=True)
    run.add_argument("--overwrite", action="store_true")

    cmp_ = sub.add_parser("compare", help="compare aggregates of two run directories")
    cmp_.add_argument("dir_a", type=Path)
    cmp_.add_argument("dir_b", type=Path)

    sim = sub.add_parser("simulate", help="run a single scenario file")
    sim.add_argument("scenario", type=Path)
    sim.add_argument("--planner", choices=("rtfmt", "rtrrt"), default="rtfmt")
    sim.add_argument("--samples", type=int, default=2500)
    sim.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.REAL_TIME.value)
    sim.add_argument("--trace", type=Path)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "run":
        try:
            spec = ExperimentSpec(args.experiment, args.env, args.planner, args.samples,
                                  args.repeats, args.seed, args.clock)
        except ValueError as e:
            print(f"plan-bench: {e}", file=sys.stderr)
            return 2

        def progress(row):
            status = "ok" if row["success"] else row["failure_reason"]
            print(f"N={row['samples']} repeat={row['repeat']} {status}", file=sys.stderr)

        try:
            _, agg = run_experiment(spec, args.out, args.overwrite, args.workers, progress)
        except FileExistsError as e:
            print(f"plan-bench: {e}", file=sys.stderr)
            return 1
        for a in agg:
            print(f"N={a['samples']}: success {a['success_rate']:.2f}, "
                  f"cost {a['executed_cost_m_mean']:.2f} m, "
                  f"arrival {a['arrival_time_s_mean']:.2f} s")
        return 0
    if args.cmd == "compare":
        report = compare(load_aggregate(args.dir_a), load_aggregate(args.dir_b))
        sys.stdout.write(format_rows(report, COMPARE_HEADER))
        return 0
    sc = load_scenario(args.scenario)
    planner = make_planner(args.planner, sc.world, args.samples, sc.seed)
    trace = [] if args.trace else None
    m = run_simulation(sc, planner, Mode(args.mode), Clock.VIRTUAL,
                       np.random.default_rng(sc.seed), trace)
    if args.trace:
        args.trace.write_text(trace_csv(trace, len(sc.world.dynamic)))
    print(m)
    return 0 if m.success else 1


if __name__ == "__main__":
    sys.exit(main())
