"""Real-time RRT* baseline.

The tree grows one sample per iteration, with RRT* style parent selection and
two rewiring queues: one seeded by freshly added nodes, one that sweeps outward
from the root and restarts whenever it drains. The structure and default
constants follow the original real-time RRT* description; a node is only added
where the tree is still sparse, which keeps the node density bounded.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import Config, World, dist, point_free, segment_free
from .planner import (ContextUpdate, Counters, Path, PathKind, TickRecord,
                      refresh_blocking)
from .tree import CLOSED, INF, IN_TREE, UNVISITED, PlanTree


@dataclass(frozen=True)
class RtRrtParams:
    N_e: int = 32
    max_attempts: int = 1000
    # a sample is only added if fewer than k_max nodes are near it, or it is far from the tree
    k_max: int = 5
    r_s: float = 1.0
    alpha: float = 0.1
    beta: float = 2.0
    # depth bound of the greedy local path when the goal is not in the tree
    path_depth: int = 20
    r_b: float = 2.0
    r_o: float = 10.0
    near_root_threshold: float = 0.5
    tick_time_cap: Optional[float] = None

    def __post_init__(self):
        if self.N_e < 1:
            raise ValueError("N_e must be at least 1")
        if self.max_attempts < 0:
            raise ValueError("max_attempts must be nonnegative")
        if self.k_max < 1 or self.r_s <= 0 or self.path_depth < 1:
            raise ValueError("k_max, r_s and path_depth must be positive")
        if not (0.0 <= self.alpha < 1.0) or self.beta < 1.0:
            raise ValueError("need 0 <= alpha < 1 and beta >= 1")
        if not (0 < self.r_b <= self.r_o):
            raise ValueError("need 0 < r_b <= r_o")


class RTRRTPlanner:
    name = "rtrrt"

    def __init__(self, world: World, params: RtRrtParams = RtRrtParams(), seed: int = 0,
                 record_events: bool = False):
        self.world = world
        self.params = params
        self.inflation = world.robot.radius
        self.rng = np.random.default_rng(seed)
        for p in (world.start, world.goal):
            if not point_free(p, world, self.inflation):
                raise ValueError(f"{p} is not in free space")
        b = world.bounds
        self.area = b.width * b.height
        # grid cells sized by the sparsest radius the tree will ever use
        cell = max(params.r_s, math.sqrt(self.area * params.k_max / math.pi) / 8.0)
        self.tree = PlanTree([world.start, world.goal], 0, cell, b.width, b.height)
        t = self.tree
        t.set_status(0, CLOSED)
        t.z = None
        self.goal_id = 1
        self.goal = Config(*world.goal)

        self.attempts = 0
        self.failures = 0
        self.q_rand: deque[int] = deque()
        self.q_root: deque[int] = deque()
        self._root_pushed: set[int] = set()
        self._visited_roots: set[int] = set()
        self._blocked: set[int] = set()
        self.counters = Counters()
        self.last_path: Optional[Path] = None
        self.events: Optional[list[TickRecord]] = [] if record_events else None

    # ------------------------------------------------------------ status
    @property
    def root(self) -> int:
        return self.tree.root

    @property
    def has_global_path(self) -> bool:
        return self.tree.cost[self.goal_id] < INF

    @property
    def search_done(self) -> bool:
        return self.attempts >= self.params.max_attempts

    @property
    def idle(self) -> bool:
        return self.search_done

    @property
    def successes(self) -> int:
        return self.attempts - self.failures

    def radius(self) -> float:
        n = max(self.tree.size, 1)
        p = self.params
        return max(math.sqrt(self.area * p.k_max / (math.pi * n)), p.r_s)

    def update_context(self, world: World) -> ContextUpdate:
        blocked, unblocked = refresh_blocking(self.tree, world, self.params.r_b,
                                              self.params.r_o, self._blocked)
        return ContextUpdate(world.robot.position, self.goal, blocked, unblocked)

    # ----------------------------------------------------------- sampling
    def _nearest_in_tree(self, p: Sequence[float]) -> int:
        t = self.tree
        status = t.status
        k = t.grid.nearest(p[0], p[1], t.xs, t.ys, accept=lambda i: status[i] != UNVISITED)
        return t.root if k is None else k

    def sample(self) -> Config:
        t, p, rng = self.tree, self.params, self.rng
        b = self.world.bounds
        u = rng.random()
        if u > 1.0 - p.alpha:
            a = t.config(self._nearest_in_tree(self.goal))
            s = rng.random()
            return Config(a.x + s * (self.goal.x - a.x), a.y + s * (self.goal.y - a.y))
        if u <= (1.0 - p.alpha) / p.beta or not self.has_global_path:
            x, y = rng.random(2)
            return Config(x * b.width, y * b.height)
        return self._sample_ellipse()

    def _sample_ellipse(self) -> Config:
        """Uniform draw from the ellipse with foci root and goal and major axis c(goal)."""
        t, rng = self.tree, self.rng
        b = self.world.bounds
        a, g = t.config(t.root), self.goal
        c_min = dist(a, g)
        c_best = t.cost[self.goal_id]
        if not (c_best > c_min > 0.0):
            x, y = rng.random(2)
            return Config(x * b.width, y * b.height)
        r1 = 0.5 * c_best
        r2 = 0.5 * math.sqrt(c_best * c_best - c_min * c_min)
        rho, phi = math.sqrt(rng.random()), 2.0 * math.pi * rng.random()
        lx, ly = r1 * rho * math.cos(phi), r2 * rho * math.sin(phi)
        ux, uy = (g.x - a.x) / c_min, (g.y - a.y) / c_min
        cx, cy = 0.5 * (a.x + g.x), 0.5 * (a.y + g.y)
        return Config(cx + ux * lx - uy * ly, cy + uy * lx + ux * ly)

    # ---------------------------------------------------------- expansion
    def expand(self, world: World) -> bool:
        """One sample attempt. Returns True if a node was added."""
        if self.search_done:
            return False
        self.attempts += 1
        t = self.tree
        x = self.sample()
        closest = self._nearest_in_tree(x)
        cc = t.config(closest)
        if not point_free(x, world, self.inflation) or \
                not segment_free(cc, x, world, self.inflation):
            self.failures += 1
            return False
        eps = self.radius()
        near = t.near_with_dist(x, IN_TREE, eps)
        if len(near) >= self.params.k_max and dist(cc, x) <= self.params.r_s:
            # region already dense: spend the attempt rewiring around the closest node
            self.q_rand.appendleft(closest)
            self.failures += 1
            return False
        cost = t.cost
        cands = sorted((cost[y] + d, y) for d, y in near if cost[y] < INF)
        parent = closest
        for _, y in cands:
            if y == closest or segment_free(t.config(y), x, world, self.inflation):
                parent = y
                break
        i = t.add_sample(x)
        t.attach(parent, i, CLOSED)
        self.q_rand.appendleft(i)
        self.counters.added += 1
        self._try_goal(i, eps, world)
        return True

    def _try_goal(self, i: int, eps: float, world: World) -> None:
        t = self.tree
        g = self.goal_id
        if t.status[g] != UNVISITED or t.dist(i, g) > eps:
            return
        if segment_free(t.config(i), self.goal, world, self.inflation):
            t.attach(i, g, CLOSED)

    # ------------------------------------------------------------ rewiring
    def _rewire_around(self, x: int, world: World, push) -> None:
        t = self.tree
        cost = t.cost
        cx = cost[x]
        if cx == INF:
            return
        xc = t.config(x)
        for d, y in sorted(t.near_with_dist(xc, IN_TREE, self.radius())):
            if y == x or y == t.root:
                continue
            if cx + d < cost[y] and not t.is_ancestor(y, x) and \
                    segment_free(xc, t.config(y), world, self.inflation):
                t.update_parent_child(x, y)
                t.recalculate_children_cost(y)
                self.counters.rewired += 1
                push(y, True)
            else:
                push(y, False)

    def rewire_random_node(self, world: World) -> None:
        self.counters.obstacle_steps += 1
        if not self.q_rand:
            return
        x = self.q_rand.popleft()

        def push(y, changed):
            if changed:
                self.q_rand.append(y)

        self._rewire_around(x, world, push)

    def rewire_from_root(self, world: World) -> None:
        self.counters.root_steps += 1
        t = self.tree
        if not self.q_root:
            self.q_root.append(t.root)
            self._root_pushed = {t.root}
        x = self.q_root.popleft()
        pushed = self._root_pushed

        def push(y, changed):
            if y not in pushed:
                pushed.add(y)
                self.q_root.append(y)

        self._rewire_around(x, world, push)

    # ---------------------------------------------------------------- paths
    def generate_path(self) -> Path:
        t = self.tree
        if t.cost[self.goal_id] < INF:
            ids = t.path_to(self.goal_id)
            return Path(tuple(ids), tuple(t.config(i) for i in ids), PathKind.GLOBAL,
                        t.cost[self.goal_id])
        ids = self._greedy_descent()
        if len(ids) == 1 and self._visited_roots:
            # cornered by former roots: forget them and allow backtracking
            self._visited_roots.clear()
            ids = self._greedy_descent()
        return Path(tuple(ids), tuple(t.config(i) for i in ids), PathKind.LOCAL, t.cost[ids[-1]])

    def _greedy_descent(self) -> list[int]:
        t = self.tree
        gx, gy = self.goal
        ids = [t.root]
        for _ in range(self.params.path_depth):
            best, best_f = -1, INF
            for c in t.children[ids[-1]]:
                if c in self._visited_roots:
                    continue
                f = t.cost[c] + math.hypot(t.xs[c] - gx, t.ys[c] - gy)
                if f < best_f:
                    best, best_f = c, f
            if best < 0:
                break
            ids.append(best)
        return ids

    def update_root(self, new_root: int) -> None:
        t = self.tree
        self._visited_roots.add(t.root)
        t.reroot(new_root)
        self.q_root.clear()
        self._root_pushed = set()
        self.counters.promotions += 1

    def plan_tick(self, world: Optional[World] = None) -> Config:
        world = world or self.world
        ctx = self.update_context(world)
        cap = self.params.tick_time_cap
        t0 = time.perf_counter() if cap else 0.0
        for _ in range(self.params.N_e):
            self.expand(world)
            self.rewire_random_node(world)
            self.rewire_from_root(world)
            if cap and time.perf_counter() - t0 > cap:
                break
        path = self.generate_path()
        self.last_path = path
        self.counters.ticks += 1
        if self.events is not None:
            self.events.append(TickRecord(self.counters.ticks - 1, self.tree.size, self.tree.root,
                                          path.kind.value, path.cost))
        t = self.tree
        if len(path) > 1 and dist(ctx.robot, t.config(t.root)) <= self.params.near_root_threshold \
                and segment_free(ctx.robot, path.configs[1], world, self.inflation):
            self.update_root(path.ids[1])
        return t.config(t.root)

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
        self._visited_roots.clear()
        if t.status[gid] == UNVISITED:
            for d, y in sorted(t.near_with_dist(new_goal, IN_TREE, self.radius())):
                if t.cost[y] < INF and segment_free(t.config(y), new_goal, self.world,
                                                    self.inflation):
                    t.attach(y, gid, CLOSED)
                    break
