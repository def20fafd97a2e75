"""Benchmark harness: experiment cells, per-run rows and per-cell aggregates."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .environments import ENV_PARAMS, ENVIRONMENTS, EnvParams
from .geometry import World
from .planner import PlannerParams, RTFMTPlanner, free_measure_cached
from .rtrrt import RtRrtParams, RTRRTPlanner
from .simulator import Clock, Mode, RunMetrics, Scenario, run_simulation

RUN_HEADER = ["experiment", "env", "planner", "samples", "repeat", "seed", "success",
              "failure_reason", "planning_time_s", "executed_cost_m", "arrival_time_s"]
METRICS = ["planning_time_s", "executed_cost_m", "arrival_time_s"]
AGG_HEADER = (["experiment", "env", "planner", "samples", "runs", "successes", "success_rate"]
              + [f"{m}_{s}" for m in METRICS for s in ("mean", "std")])
PLANNERS = ("rtfmt", "rtrrt")
DEFAULT_SAMPLES = (500, 1500, 2500, 3500, 4500)
DEFAULT_REPEATS = 50


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: int
    env: str
    planner: str
    samples: tuple[int, ...]
    repeats: int
    seed: int = 0
    clock: str = Clock.VIRTUAL.value

    def __post_init__(self):
        if self.experiment not in (1, 2, 3):
            raise ValueError("experiment must be 1, 2 or 3")
        if self.env not in ENVIRONMENTS:
            raise ValueError(f"unknown environment {self.env!r}")
        if self.planner not in PLANNERS:
            raise ValueError(f"unknown planner {self.planner!r}")
        s = tuple(self.samples)
        if not s or any(n < 0 for n in s) or any(a >= b for a, b in zip(s, s[1:])):
            raise ValueError("sample counts must be a nonempty ascending list")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        Clock(self.clock)
        object.__setattr__(self, "samples", s)


def run_seed(base: int, experiment: int, env: str, samples: int, repeat: int) -> int:
    """Seed of one run. Independent of the planner so both planners see the same world."""
    key = f"{base}|{experiment}|{env}|{samples}|{repeat}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def make_planner(name: str, world: World, samples: int, seed: int):
    ep = ENV_PARAMS.get(world.name)
    if ep is None:
        r = world.robot.radius
        ep = EnvParams(world.robot.speed, r, PlannerParams.r_b, PlannerParams.r_o, 2.0 * r)
    if name == "rtfmt":
        params = PlannerParams(r_b=ep.r_b, r_o=ep.r_o, near_root_threshold=ep.robot_radius)
        return RTFMTPlanner(world, samples, params, seed=seed)
    if name == "rtrrt":
        params = RtRrtParams(max_attempts=samples, r_s=ep.r_s, r_b=ep.r_b, r_o=ep.r_o,
                             near_root_threshold=ep.robot_radius)
        return RTRRTPlanner(world, params, seed=seed)
    raise ValueError(f"unknown planner {name!r}")


def run_one(experiment: int, env: str, planner: str, samples: int, repeat: int,
            base_seed: int = 0, clock: str = Clock.VIRTUAL.value) -> tuple[dict, RunMetrics]:
    seed = run_seed(base_seed, experiment, env, samples, repeat)
    env_seed, planner_seed, obstacle_seed = (
        int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(3))
    world = ENVIRONMENTS[env](env_seed, dynamic=experiment == 3)
    # the free-space measure depends only on the static layout, so it is not billed per run
    free_measure_cached(world, PlannerParams().measure_resolution, world.robot.radius)
    t0 = time.perf_counter()
    p = make_planner(planner, world, samples, planner_seed)
    setup = time.perf_counter() - t0
    mode = Mode.NON_REAL_TIME if experiment == 1 else Mode.REAL_TIME
    m = run_simulation(Scenario(world, seed=seed), p, mode, Clock(clock),
                       np.random.default_rng(obstacle_seed), setup_time=setup)
    row = {"experiment": experiment, "env": env, "planner": planner, "samples": samples,
           "repeat": repeat, "seed": seed, "success": int(m.success),
           "failure_reason": m.failure_reason, "planning_time_s": m.planning_time,
           "executed_cost_m": m.executed_cost if m.success else math.nan,
           "arrival_time_s": m.arrival_time}
    return row, m


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def format_rows(rows: Iterable[dict], header: Sequence[str]) -> str:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(_fmt(r[h]) for h in header))
    return "\n".join(lines) + "\n"


def _num(s: str) -> float:
    return math.nan if s == "" else float(s)


def aggregate(rows: Sequence[dict]) -> list[dict]:
    """One row per (experiment, env, planner, samples). Means and stds use successful runs only."""
    cells: dict[tuple, list[dict]] = {}
    for r in rows:
        key = (int(r["experiment"]), r["env"], r["planner"], int(r["samples"]))
        cells.setdefault(key, []).append(r)
    out = []
    for key in sorted(cells):
        group = cells[key]
        ok = [r for r in group if int(r["success"])]
        agg = dict(zip(("experiment", "env", "planner", "samples"), key))
        agg.update(runs=len(group), successes=len(ok), success_rate=len(ok) / len(group))
        for m in METRICS:
            vals = [v for v in (_num(r[m]) if isinstance(r[m], str) else float(r[m]) for r in ok)
                    if not math.isnan(v)]
            agg[f"{m}_mean"] = statistics.fmean(vals) if vals else math.nan
            agg[f"{m}_std"] = statistics.stdev(vals) if len(vals) > 1 else math.nan
        out.append(agg)
    return out


def _job(args):
    row, _ = run_one(*args)
    return row


def run_experiment(spec: ExperimentSpec, out: Optional[Path] = None, overwrite: bool = False,
                   workers: int = 1, progress=None) -> tuple[list[dict], list[dict]]:
    """Run every (samples, repeat) cell of ``spec``; optionally write CSVs to ``out``."""
    if out is not None:
        out = Path(out)
        if out.exists() and any(out.iterdir()) and not overwrite:
            raise FileExistsError(f"{out} exists; pass overwrite to replace it")
    jobs = [(spec.experiment, spec.env, spec.planner, n, k, spec.seed, spec.clock)
            for n in spec.samples for k in range(spec.repeats)]
    rows: list[dict] = []
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            for row in pool.map(_job, jobs):
                rows.append(row)
                if progress:
                    progress(row)
    else:
        for j in jobs:
            row = _job(j)
            rows.append(row)
            if progress:
                progress(row)
    agg = aggregate(rows)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "runs.csv").write_text(format_rows(rows, RUN_HEADER))
        (out / "aggregate.csv").write_text(format_rows(agg, AGG_HEADER))
        meta = asdict(spec) | {
            "failed_runs": "counted in success_rate only; excluded from means and stds",
            "samples_meaning": "rtfmt: free-space samples drawn up front; "
                               "rtrrt: sample-and-extend attempts",
        }
        (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return rows, agg


def read_csv(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def load_aggregate(directory) -> list[dict]:
    rows = read_csv(Path(directory) / "aggregate.csv")
    for r in rows:
        for k in AGG_HEADER[3:]:
            r[k] = _num(r[k])
        r["experiment"] = int(r["experiment"])
        r["samples"] = int(r["samples"])
    return rows


COMPARE_HEADER = (["experiment", "env", "samples", "planner_a", "planner_b"]
                  + [f"diff_{m}" for m in METRICS] + ["diff_success_rate"]
                  + [f"winner_{m}" for m in METRICS] + ["winner_success_rate"])


def _winner(a: float, b: float, lower_is_better: bool, na: str, nb: str) -> str:
    if math.isnan(a) or math.isnan(b):
        return "n/a"
    if a == b:
        return "tie"
    return na if (a < b) == lower_is_better else nb


def compare(rows_a: Sequence[dict], rows_b: Sequence[dict]) -> list[dict]:
    """Cell-by-cell differences (A minus B) over cells present in both inputs."""
    index_b = {(r["experiment"], r["env"], r["samples"]): r for r in rows_b}
    out = []
    for a in rows_a:
        key = (a["experiment"], a["env"], a["samples"])
        b = index_b.get(key)
        if b is None:
            continue
        na, nb = a["planner"], b["planner"]
        if na == nb:
            na, nb = f"{na}(a)", f"{nb}(b)"
        row = {"experiment": key[0], "env": key[1], "samples": key[2],
               "planner_a": a["planner"], "planner_b": b["planner"]}
        for m in METRICS:
            x, y = a[f"{m}_mean"], b[f"{m}_mean"]
            row[f"diff_{m}"] = x - y
            row[f"winner_{m}"] = _winner(x, y, True, na, nb)
        row["diff_success_rate"] = a["success_rate"] - b["success_rate"]
        row["winner_success_rate"] = _winner(a["success_rate"], b["success_rate"], False, na, nb)
        out.append(row)
    return out
