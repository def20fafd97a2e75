"""Discrete-time simulation loop shared by both planners."""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional, Protocol

import numpy as np

from .environments import REDRAW_PERIOD, random_heading
from .geometry import (RANDOM_DIRECTION, VERTICAL_SWEEP, Config, DynamicObstacle, RobotState,
                       StaticObstacle, World, WorldBounds, discs_overlap, dist,
                       point_free, point_rect_distance, segment_rect_distance)
from .tree import INF


class Mode(str, Enum):
    NON_REAL_TIME = "non-real-time"
    REAL_TIME = "real-time"


class Clock(str, Enum):
    VIRTUAL = "virtual"
    WALL = "wall"


@dataclass(frozen=True)
class SimParams:
    dt: float = 0.05
    max_time: float = 300.0
    # defaults to the robot radius when None
    goal_tolerance: Optional[float] = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.max_time <= 0:
            raise ValueError("max_time must be positive")


@dataclass
class Scenario:
    world: World
    sim: SimParams = field(default_factory=SimParams)
    seed: int = 0
    planner: dict = field(default_factory=dict)

    def __post_init__(self):
        r = self.world.robot.radius
        for p in (self.world.start, self.world.goal):
            if not point_free(p, self.world, r):
                raise ValueError(f"{p} is not in free space")

    @property
    def goal_tolerance(self) -> float:
        g = self.sim.goal_tolerance
        return self.world.robot.radius if g is None else g


@dataclass
class RunMetrics:
    success: bool
    failure_reason: str  # "", "collision" or "timeout"
    planning_time: float
    executed_cost: float
    arrival_time: float
    ticks: int = 0
    min_static_clearance: float = INF
    unsafe_path: bool = False


class Planner(Protocol):
    has_global_path: bool
    search_done: bool
    idle: bool
    last_path: object

    def plan_tick(self, world: World) -> Config: ...


# -------------------------------------------------------------------- dynamics
def _obstacle_fits(c: Config, ob: DynamicObstacle, world: World) -> bool:
    b, r = world.bounds, ob.radius
    if not (r <= c[0] <= b.width - r and r <= c[1] <= b.height - r):
        return False
    return point_free(c, world, r)


def step_dynamics(world: World, dt: float, rng: Optional[np.random.Generator] = None) -> None:
    """Advance every dynamic obstacle by ``speed * dt`` along its policy.

    A random-direction obstacle redraws its heading every few seconds and when
    the next step would hit a wall; a vertical-sweep obstacle reverses.
    If no admissible move exists the obstacle stays put for this tick.
    """
    if dt == 0:
        return
    for ob in world.dynamic:
        step = ob.speed * dt
        if ob.policy == RANDOM_DIRECTION:
            ob.redraw_in -= dt
            if ob.redraw_in <= 0.0:
                ob.heading = random_heading(rng)
                ob.redraw_in += REDRAW_PERIOD
            for _ in range(16):
                nxt = Config(ob.center.x + step * ob.heading.x, ob.center.y + step * ob.heading.y)
                if _obstacle_fits(nxt, ob, world):
                    ob.center = nxt
                    break
                ob.heading = random_heading(rng)
        else:
            for _ in range(2):
                nxt = Config(ob.center.x + step * ob.heading.x, ob.center.y + step * ob.heading.y)
                if _obstacle_fits(nxt, ob, world):
                    ob.center = nxt
                    break
                ob.heading = Config(-ob.heading.x, -ob.heading.y)


def step_robot(robot: RobotState, target: Config, dt: float) -> float:
    """Move straight toward ``target`` by at most ``speed * dt``; returns the distance moved."""
    d = dist(robot.position, target)
    reach = robot.speed * dt
    if d <= reach:
        robot.position = Config(*target)
        return d
    f = reach / d
    p = robot.position
    robot.position = Config(p.x + f * (target[0] - p.x), p.y + f * (target[1] - p.y))
    return reach


def static_clearance(p: Config, world: World, q: Optional[Config] = None) -> float:
    """Distance from the point ``p`` (or the segment pq) to the nearest static rectangle."""
    if q is None:
        return min((point_rect_distance(p[0], p[1], o) for o in world.obstacles), default=INF)
    return min((segment_rect_distance(p[0], p[1], q[0], q[1], o) for o in world.obstacles),
               default=INF)


# ---------------------------------------------------------------------- loop
def run_simulation(scenario: Scenario, planner: Planner, mode: Mode = Mode.REAL_TIME,
                   clock: Clock = Clock.VIRTUAL, obstacle_rng: Optional[np.random.Generator] = None,
                   trace: Optional[list] = None, retarget_queue: Optional[list] = None,
                   setup_time: float = 0.0) -> RunMetrics:
    """Drive ``planner`` in ``scenario.world`` until success, collision or timeout.

    In non-real-time mode the robot stays still until the planner has finished
    its sample budget and holds a path to the goal. ``planning_time`` is the
    time until that release; in real-time mode it is the time until the first
    path to the goal. The world is mutated in place.

    With the wall clock, ``setup_time`` (planner construction) counts as planning.
    """
    world = scenario.world
    sim = scenario.sim
    dt, tol = sim.dt, scenario.goal_tolerance
    if obstacle_rng is None:
        obstacle_rng = np.random.default_rng(scenario.seed)
    goals = list(retarget_queue or [])
    goal = Config(*world.goal)
    robot = world.robot

    released = mode == Mode.REAL_TIME
    elapsed = setup_time if clock == Clock.WALL else 0.0
    planning_time = math.nan
    executed = 0.0
    ticks = 0
    clearance = static_clearance(robot.position, world)
    unsafe = False

    def result(ok: bool, reason: str) -> RunMetrics:
        return RunMetrics(ok, reason, planning_time, executed, elapsed if ok else math.nan, ticks,
                          clearance, unsafe)

    while elapsed < sim.max_time:
        w0 = time.perf_counter()
        target = planner.plan_tick(world)
        wall = time.perf_counter() - w0
        ticks += 1
        path = planner.last_path
        if path is not None and not math.isfinite(path.cost):
            unsafe = True
        moving = released
        if clock == Clock.VIRTUAL:
            elapsed += dt
        else:
            # idle planning runs as fast as the machine allows; execution ticks take at least dt
            elapsed += max(wall, dt) if moving or world.dynamic else wall

        if not released:
            if planner.search_done and planner.has_global_path:
                released = True
                planning_time = elapsed
        elif math.isnan(planning_time) and planner.has_global_path:
            planning_time = elapsed

        if moving:
            before = robot.position
            step = step_robot(robot, target, dt)
            if step > 0.0:
                executed += step
                clearance = min(clearance, static_clearance(before, world, robot.position))
        step_dynamics(world, dt, obstacle_rng)
        if trace is not None:
            row = [ticks * dt, robot.position.x, robot.position.y]
            for ob in world.dynamic:
                row += [ob.center.x, ob.center.y]
            trace.append(row)

        for ob in world.dynamic:
            if discs_overlap(robot.position, robot.radius, ob.center, ob.radius):
                return result(False, "collision")
        if dist(robot.position, goal) <= tol:
            if not goals:
                return result(True, "")
            goal = Config(*goals.pop(0))
            world.goal = goal
            planner.retarget(goal)
        if not world.dynamic and planner.search_done and planner.idle \
                and not planner.has_global_path:
            # nothing left to change the tree, so the goal can never be connected
            return result(False, "timeout")
    return result(False, "timeout")


def trace_csv(trace: list, n_obstacles: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["t", "robot_x", "robot_y"]
    for i in range(n_obstacles):
        header += [f"obs{i}_x", f"obs{i}_y"]
    w.writerow(header)
    w.writerows(trace)
    return buf.getvalue()


# ------------------------------------------------------------------- scenario io
def scenario_to_dict(sc: Scenario) -> dict:
    w = sc.world
    return {
        "name": w.name,
        "bounds": [w.bounds.width, w.bounds.height],
        "static": [[o.xmin, o.ymin, o.xmax, o.ymax] for o in w.obstacles],
        "dynamic": [{"center": list(o.center), "radius": o.radius, "speed": o.speed,
                     "policy": o.policy, "heading": list(o.heading), "redraw_in": o.redraw_in}
                    for o in w.dynamic],
        "start": list(w.start),
        "goal": list(w.goal),
        "robot": {"position": list(w.robot.position), "speed": w.robot.speed,
                  "radius": w.robot.radius},
        "planner": dict(sc.planner),
        "sim": asdict(sc.sim),
        "seed": sc.seed,
    }


def scenario_from_dict(d: dict) -> Scenario:
    r = d["robot"]
    world = World(
        WorldBounds(*d["bounds"]),
        [StaticObstacle(*o) for o in d["static"]],
        RobotState(Config(*r["position"]), r["speed"], r["radius"]),
        Config(*d["start"]), Config(*d["goal"]),
        [DynamicObstacle(Config(*o["center"]), o["radius"], o["speed"], o["policy"],
                         Config(*o["heading"]), o.get("redraw_in", 0.0)) for o in d["dynamic"]],
        d.get("name", "custom"))
    return Scenario(world, SimParams(**d.get("sim", {})), d.get("seed", 0), d.get("planner", {}))


def save_scenario(sc: Scenario, path) -> None:
    with open(path, "w") as f:
        json.dump(scenario_to_dict(sc), f, indent=2)


def load_scenario(path) -> Scenario:
    with open(path) as f:
        return scenario_from_dict(json.load(f))


def fresh_copy(sc: Scenario) -> Scenario:
    return copy.deepcopy(sc)
