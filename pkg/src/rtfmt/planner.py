"""Real-time fast marching tree planner.

One ``plan_tick`` refreshes obstacle blocking, then runs a fixed number of
iterations, each made of one bounded expansion step and one step of each of the
two rewiring queues, and finally picks the path the robot should follow.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .geometry import Config, World, dist, free_space_measure, point_free, segment_free
from .sampling import SamplerParams, neighborhood_radius, sample_free
from .tree import CLOSED, INF, OPEN, OPEN_NEW, UNVISITED, PlanTree

REWIRE_STATUSES = (OPEN, CLOSED)


@dataclass(frozen=True)
class PlannerParams:
    N_e: int = 32
    r_b: float = 2.0
    r_o: float = 10.0
    near_root_threshold: float = 0.5
    gamma_s: float = 1.1
    # optional secondary limit on the wall-clock length of one tick, seconds
    tick_time_cap: Optional[float] = None
    measure_resolution: int = 1000
    # also restart the root rewiring cascade after blocking changes, not only on root moves
    cascade_on_blocking: bool = True

    def __post_init__(self):
        if self.N_e < 1:
            raise ValueError("N_e must be at least 1")
        if not (0 < self.r_b <= self.r_o):
            raise ValueError("need 0 < r_b <= r_o")
        if self.near_root_threshold < 0:
            raise ValueError("near_root_threshold must be nonnegative")


@dataclass(frozen=True)
class ContextUpdate:
    robot: Config
    goal: Config
    blocked: tuple[int, ...]
    unblocked: tuple[int, ...]


class PathKind(str, Enum):
    GLOBAL = "global"
    LOCAL = "local"


@dataclass(frozen=True)
class Path:
    ids: tuple[int, ...]
    configs: tuple[Config, ...]
    kind: PathKind
    cost: float

    def __len__(self) -> int:
        return len(self.ids)


@dataclass
class Counters:
    ticks: int = 0
    expand_calls: int = 0
    added: int = 0
    obstacle_steps: int = 0
    root_steps: int = 0
    rewired: int = 0
    promotions: int = 0


@dataclass
class TickRecord:
    tick: int
    tree_size: int
    root: int
    path_kind: str
    path_cost: float


_MEASURE_CACHE: dict = {}


def free_measure_cached(world: World, resolution: int, inflation: float) -> float:
    key = (world.bounds, tuple(world.obstacles), resolution, inflation)
    if key not in _MEASURE_CACHE:
        _MEASURE_CACHE[key] = free_space_measure(world, resolution, inflation)
    return _MEASURE_CACHE[key]



def refresh_blocking(tree: PlanTree, world: World, r_b: float, r_o: float,
                     blocked: set[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Block tree nodes within ``r_b`` of obstacles sensed within ``r_o`` of the robot.

    ``blocked`` is the set from the previous call and is updated in place.
    Returns the newly blocked and newly unblocked ids, each sorted.
    """
    t = tree
    robot = world.robot.position
    inside: set[int] = set()
    status = t.status
    for ob in world.dynamic:
        if dist(robot, ob.center) > r_o:
            continue
        for _, k in t.grid.within(ob.center[0], ob.center[1], r_b, t.xs, t.ys):
            if status[k] != UNVISITED:
                inside.add(k)
    # the robot sits at (or heads to) the root, never block it
    inside.discard(t.root)
    newly_blocked = sorted(inside - blocked)
    newly_unblocked = sorted(blocked - inside)
    for k in newly_blocked:
        t.set_blocked(k)
    for k in newly_unblocked:
        t.set_unblocked(k)
    blocked.clear()
    blocked.update(inside)
    return tuple(newly_blocked), tuple(newly_unblocked)


class RTFMTPlanner:
    name = "rtfmt"

    def __init__(self, world: World, N: int, params: PlannerParams = PlannerParams(),
                 seed: int = 0, samples: Optional[Sequence[Sequence[float]]] = None,
                 r_n: Optional[float] = None, record_events: bool = False):
        self.world = world
        self.params = params
        self.inflation = world.robot.radius
        if samples is None:
            sp = SamplerParams(N=N, gamma_s=params.gamma_s, seed=seed)
            samples = sample_free(world, sp, np.random.default_rng(seed), self.inflation)
        else:
            samples = [Config(*p) for p in samples]
        if r_n is None:
            mu = free_measure_cached(world, params.measure_resolution, self.inflation)
            r_n = neighborhood_radius(len(samples) - 2, 2, mu, params.gamma_s)
        self.N = len(samples) - 2
        start_id, goal_id = len(samples) - 2, len(samples) - 1
        b = world.bounds
        self.tree = PlanTree(samples, start_id, r_n, b.width, b.height)
        self.tree.precompute_neighbors()
        self.goal_id = goal_id
        self.goal = Config(*samples[goal_id])
        self._h = self._heuristic()

        self._blocked: set[int] = set()
        self._qo_in: set[int] = set()
        # former roots are not local-path targets, which keeps the robot from oscillating
        self._visited_roots: set[int] = set()
        self._qr_seen: set[int] = set()
        # set when the root moved or blocking changed; the next root step restarts the cascade
        self._root_dirty = False
        self._progress = True
        self.exhaustions = 0
        self.counters = Counters()
        self.last_path: Optional[Path] = None
        self.events: Optional[list[TickRecord]] = [] if record_events else None

    # ------------------------------------------------------------ status
    @property
    def r_n(self) -> float:
        return self.tree.r_n

    @property
    def root(self) -> int:
        return self.tree.root

    @property
    def has_global_path(self) -> bool:
        return self.tree.cost[self.goal_id] < INF

    @property
    def search_done(self) -> bool:
        """True once the initial sweep over the sample set has run out of open nodes."""
        return self.exhaustions > 0

    @property
    def idle(self) -> bool:
        t = self.tree
        return t.z is None and not (t.to_open and self._progress)

    def _heuristic(self) -> np.ndarray:
        gx, gy = self.goal
        return np.hypot(np.asarray(self.tree.xs) - gx, np.asarray(self.tree.ys) - gy)

    # ------------------------------------------------------------ context
    def update_context(self, world: World) -> ContextUpdate:
        blocked, unblocked = refresh_blocking(self.tree, world, self.params.r_b,
                                              self.params.r_o, self._blocked)
        if unblocked:
            self._progress = True
        if (blocked or unblocked) and self.params.cascade_on_blocking:
            self._root_dirty = True
        # queued right away: Q_o rarely drains, so waiting for it to empty would stall new events
        self._enqueue_obstacle(blocked)
        self._enqueue_obstacle(unblocked)
        return ContextUpdate(world.robot.position, self.goal, blocked, unblocked)

    # ---------------------------------------------------------- expansion
    def expand_fmt(self, world: Optional[World] = None) -> None:
        """Perform one bounded step of the fast-marching expansion."""
        world = world or self.world
        t = self.tree
        self.counters.expand_calls += 1
        if t.z is None:
            t.z = t.pop_min_open()
            if t.z is None:
                self._reopen()
            return
        if not t.x_near:
            t.x_near = t.near_id(t.z, (UNVISITED,))
            if t.x_near:
                return
        else:
            x = t.x_near.pop()
            if t.status[x] == UNVISITED:
                self._connect(x, world)
            if t.x_near:
                return
        self._close_z(world)

    def _connect(self, x: int, world: World) -> bool:
        t = self.tree
        cost = t.cost
        best_f, y_min = INF, -1
        for d, y in t.near_id_with_dist(x, (OPEN,)):
            f = cost[y] + d
            if f < best_f or (f == best_f and y < y_min):
                best_f, y_min = f, y
        if y_min < 0 or cost[y_min] == INF:
            return False
        if not segment_free((t.xs[y_min], t.ys[y_min]), (t.xs[x], t.ys[x]), world, self.inflation):
            return False
        t.attach(y_min, x, OPEN_NEW)
        t.open_new.append(x)
        self.counters.added += 1
        self._progress = True
        return True

    def _close_z(self, world: World) -> None:
        t = self.tree
        z = t.z
        t.set_status(z, CLOSED)
        for x in t.open_new:
            if t.status[x] == OPEN_NEW:
                t.set_status(x, OPEN)
        t.open_new = []
        zc = t.config(z)
        for x in t.near_id(z, (UNVISITED,)):
            if segment_free(zc, t.config(x), world, self.inflation):
                t.to_open.add(z)
                break
        t.z = t.pop_min_open()
        if t.z is None:
            self.exhaustions += 1
            self._reopen()

    def _reopen(self) -> None:
        t = self.tree
        if not (t.to_open and self._progress):
            return
        for v in sorted(t.to_open):
            if t.status[v] == CLOSED:
                t.set_status(v, OPEN)
        t.to_open.clear()
        self._progress = False
        t.z = t.pop_min_open()

    # ------------------------------------------------------------ rewiring
    def _reattach(self, x: int, world: World) -> bool:
        """Move ``x`` under the cheapest collision-free neighbor that strictly lowers its cost."""
        t = self.tree
        cost = t.cost
        cur = cost[x]
        cands = []
        for d, y in t.near_id_with_dist(x, REWIRE_STATUSES):
            f = cost[y] + d
            if f < cur and y != x:
                cands.append((f, y))
        if not cands:
            return False
        cands.sort()
        xc = t.config(x)
        for f, y in cands:
            if t.is_ancestor(x, y):
                continue
            if segment_free(t.config(y), xc, world, self.inflation):
                t.update_parent_child(y, x)
                t.recalculate_children_cost(x)
                self.counters.rewired += 1
                return True
        return False

    def _enqueue_obstacle(self, ids) -> None:
        # an id already waiting in Q_o is not queued twice
        queued = self._qo_in
        for k in ids:
            if k not in queued:
                queued.add(k)
                self.tree.q_obstacle.append(k)

    def rewire_from_obstacles(self, world: Optional[World] = None) -> None:
        world = world or self.world
        t = self.tree
        self.counters.obstacle_steps += 1
        if not t.q_obstacle:
            return
        xb = t.q_obstacle.popleft()
        self._qo_in.discard(xb)
        if t.status[xb] == UNVISITED or xb == t.root:
            return
        if t.blocked[xb]:
            # still inside an obstacle: leave it, but let its subtree look for a way around
            self._enqueue_obstacle(t.children[xb])
            return
        if self._reattach(xb, world) or t.cost[xb] == INF:
            self._enqueue_obstacle(t.children[xb])

    def rewire_from_root(self, world: Optional[World] = None) -> None:
        world = world or self.world
        t = self.tree
        self.counters.root_steps += 1
        if self._root_dirty:
            # the neighborhood of the robot changed, so start over from the root
            self._start_root_cascade()
        elif not t.q_root:
            return
        x = t.q_root.popleft()
        if t.status[x] == UNVISITED:
            return
        if x != t.root and not t.blocked[x]:
            self._reattach(x, world)
        # spreading over neighbors rather than tree children lets one cascade reach
        # nodes whose ancestors were cut off by a blocked node
        seen = self._qr_seen
        for y in t.near_id(x, REWIRE_STATUSES):
            if y not in seen:
                seen.add(y)
                t.q_root.append(y)

    # ---------------------------------------------------------------- paths
    def generate_path(self) -> Path:
        t = self.tree
        if t.cost[self.goal_id] < INF:
            end, kind = self.goal_id, PathKind.GLOBAL
        else:
            end = self._local_target()
            if end == t.root and self._visited_roots:
                # cornered by former roots: forget them and allow backtracking
                self._visited_roots.clear()
                end = self._local_target()
            kind = PathKind.LOCAL
        ids = tuple(t.path_to(end))
        return Path(ids, tuple(t.config(i) for i in ids), kind, t.cost[end])

    def _local_target(self) -> int:
        """Finite-cost node minimizing cost plus distance to goal, root and former roots excluded."""
        t = self.tree
        f = np.asarray(t.cost) + self._h
        # the root always attains the unconstrained minimum, so it is not a candidate
        f[t.root] = INF
        if self._visited_roots:
            f[list(self._visited_roots)] = INF
        end = int(np.argmin(f))
        return end if math.isfinite(f[end]) else t.root

    def _start_root_cascade(self) -> None:
        t = self.tree
        t.q_root.clear()
        self._qr_seen = {t.root}
        t.q_root.append(t.root)
        self._root_dirty = False

    def update_root(self, new_root: int) -> None:
        self._visited_roots.add(self.tree.root)
        self.tree.reroot(new_root)
        self._root_dirty = True
        self._progress = True
        self.counters.promotions += 1

    def plan_tick(self, world: Optional[World] = None) -> Config:
        world = world or self.world
        ctx = self.update_context(world)
        cap = self.params.tick_time_cap
        t0 = time.perf_counter() if cap else 0.0
        for _ in range(self.params.N_e):
            self.expand_fmt(world)
            self.rewire_from_obstacles(world)
            self.rewire_from_root(world)
            if cap and time.perf_counter() - t0 > cap:
                break
        path = self.generate_path()
        self.last_path = path
        self.counters.ticks += 1
        if self.events is not None:
            self.events.append(TickRecord(self.counters.ticks - 1, self.tree.size, self.tree.root,
                                          path.kind.value, path.cost))
        if len(path) > 1 and self._near_root(ctx.robot, path.configs[1], world):
            self.update_root(path.ids[1])
        return self.tree.config(self.tree.root)

    def _near_root(self, robot: Config, nxt: Config, world: World) -> bool:
        if dist(robot, self.tree.config(self.tree.root)) > self.params.near_root_threshold:
            return False
        # the robot cuts straight to the next node, so that shortcut must be clear
        return segment_free(robot, nxt, world, self.inflation)

    # -------------------------------------------------------------- goals
    def retarget(self, new_goal: Sequence[float]) -> None:
        new_goal = Config(*new_goal)
        if not point_free(new_goal, self.world, self.inflation):
            raise ValueError(f"goal {new_goal} is not in free space")
        t = self.tree
        gid = t.find_sample(new_goal)
        if gid is None:
            gid = t.add_sample(new_goal)
        self.goal_id = gid
        self.goal = new_goal
        self._h = self._heuristic()
        self._visited_roots.clear()
        for k in t.near(new_goal, CLOSED):
            t.to_open.add(k)
        self._progress = True
