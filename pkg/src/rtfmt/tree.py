"""Planning tree over a fixed sample set.

Nodes live in parallel lists indexed by a dense integer id. Neighbor queries go
through a uniform grid whose cell side equals the connection radius, so a
radius-``r_n`` query touches a 3x3 block of cells.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Config

INF = math.inf


class NodeStatus(IntEnum):
    UNVISITED = 0
    OPEN = 1
    OPEN_NEW = 2
    CLOSED = 3


UNVISITED, OPEN, OPEN_NEW, CLOSED = (NodeStatus.UNVISITED, NodeStatus.OPEN,
                                     NodeStatus.OPEN_NEW, NodeStatus.CLOSED)
IN_TREE = (OPEN, OPEN_NEW, CLOSED)


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    """Read-only snapshot of one tree vertex."""

    id: int
    config: Config
    parent: Optional[int]
    children: tuple[int, ...]
    cost: float
    status: NodeStatus
    blocked: bool


class SpatialGrid:
    """Bucket grid over [0, width] x [0, height]; points outside are clamped to edge cells."""

    def __init__(self, width: float, height: float, cell: float):
        if cell <= 0:
            raise ValueError("cell size must be positive")
        self.cell = float(cell)
        self.nx = max(1, int(math.ceil(width / cell)))
        self.ny = max(1, int(math.ceil(height / cell)))
        self.cells: list[list[int]] = [[] for _ in range(self.nx * self.ny)]

    def _ix(self, x: float) -> int:
        i = int(x / self.cell)
        return 0 if i < 0 else (self.nx - 1 if i >= self.nx else i)

    def _iy(self, y: float) -> int:
        j = int(y / self.cell)
        return 0 if j < 0 else (self.ny - 1 if j >= self.ny else j)

    def insert(self, i: int, x: float, y: float) -> None:
        self.cells[self._iy(y) * self.nx + self._ix(x)].append(i)

    def block(self, x: float, y: float, radius: float) -> Iterable[list[int]]:
        """Buckets overlapping the square of half-side ``radius`` around (x, y)."""
        i0, i1 = self._ix(x - radius), self._ix(x + radius)
        j0, j1 = self._iy(y - radius), self._iy(y + radius)
        nx, cells = self.nx, self.cells
        for j in range(j0, j1 + 1):
            row = j * nx
            for i in range(i0, i1 + 1):
                yield cells[row + i]

    def within(self, x: float, y: float, radius: float, xs: Sequence[float],
               ys: Sequence[float]) -> list[tuple[float, int]]:
        """(distance, id) pairs with distance <= radius, unsorted."""
        hyp = math.hypot
        out = []
        for bucket in self.block(x, y, radius):
            for k in bucket:
                d = hyp(xs[k] - x, ys[k] - y)
                if d <= radius:
                    out.append((d, k))
        return out

    def nearest(self, x: float, y: float, xs: Sequence[float], ys: Sequence[float],
                accept=None) -> Optional[int]:
        """Closest accepted id by ring search; ties broken by id."""
        ci, cj = self._ix(x), self._iy(y)
        best = (INF, -1)
        ring = 0
        hyp = math.hypot
        max_ring = max(self.nx, self.ny)
        while ring <= max_ring:
            # cells on this ring are at least (ring - 1) * cell away
            if best[1] >= 0 and (ring - 1) * self.cell > best[0]:
                break
            for j in range(cj - ring, cj + ring + 1):
                if j < 0 or j >= self.ny:
                    continue
                edge_row = j == cj - ring or j == cj + ring
                step = 1 if edge_row else 2 * ring
                for i in range(ci - ring, ci + ring + 1, max(step, 1)):
                    if i < 0 or i >= self.nx:
                        continue
                    for k in self.cells[j * self.nx + i]:
                        if accept is not None and not accept(k):
                            continue
                        cand = (hyp(xs[k] - x, ys[k] - y), k)
                        if cand < best:
                            best = cand
            ring += 1
        return best[1] if best[1] >= 0 else None


class PlanTree:
    """Search tree plus the persistent expansion and rewiring state."""

    def __init__(self, samples: Sequence[Sequence[float]], root: int, r_n: float,
                 width: float, height: float, cell: Optional[float] = None):
        if not (0 <= root < len(samples)):
            raise TreeError("root id out of range")
        if r_n <= 0:
            raise ValueError("r_n must be positive")
        self.r_n = float(r_n)
        self.xs: list[float] = [float(p[0]) for p in samples]
        self.ys: list[float] = [float(p[1]) for p in samples]
        n = len(samples)
        self.parent: list[Optional[int]] = [None] * n
        self.children: list[list[int]] = [[] for _ in range(n)]
        self.cost: list[float] = [INF] * n
        self.elen: list[float] = [0.0] * n  # length of the edge to the parent
        self.status: list[NodeStatus] = [UNVISITED] * n
        self.blocked: list[bool] = [False] * n
        self.grid = SpatialGrid(width, height, cell or r_n)
        for i in range(n):
            self.grid.insert(i, self.xs[i], self.ys[i])
        # sorted r_n-neighborhoods of sample ids, filled on first use
        self._nbrs: dict[int, list[tuple[float, int]]] = {}
        self._pre = None

        self.root = root
        self.size = 1  # nodes currently in the tree
        self.cost[root] = 0.0
        self._heap: list[tuple[float, int]] = []
        self.status[root] = OPEN
        heapq.heappush(self._heap, (0.0, root))

        # expansion state carried across calls
        self.z: Optional[int] = root
        self.x_near: list[int] = []
        self.to_open: set[int] = set()
        self.open_new: list[int] = []
        # rewiring queues
        self.q_obstacle: deque[int] = deque()
        self.q_root: deque[int] = deque()

    # ----------------------------------------------------------------- access
    def __len__(self) -> int:
        return len(self.xs)

    def config(self, i: int) -> Config:
        return Config(self.xs[i], self.ys[i])

    def node(self, i: int) -> Node:
        return Node(i, self.config(i), self.parent[i], tuple(self.children[i]),
                    self.cost[i], self.status[i], self.blocked[i])

    def in_tree(self, i: int) -> bool:
        return self.status[i] != UNVISITED

    def tree_ids(self) -> list[int]:
        return [i for i, s in enumerate(self.status) if s != UNVISITED]

    def add_sample(self, p: Sequence[float]) -> int:
        i = len(self.xs)
        self.xs.append(float(p[0]))
        self.ys.append(float(p[1]))
        self.parent.append(None)
        self.children.append([])
        self.cost.append(INF)
        self.elen.append(0.0)
        self.status.append(UNVISITED)
        self.blocked.append(False)
        self.grid.insert(i, self.xs[i], self.ys[i])
        touched = self.grid.within(self.xs[i], self.ys[i], self.r_n, self.xs, self.ys)
        if touched:
            # neighborhoods around the new sample are rebuilt from the grid on demand
            self._pre = None
            self._nbrs.clear()
        return i

    def find_sample(self, p: Sequence[float]) -> Optional[int]:
        for d, k in self.grid.within(p[0], p[1], 0.0, self.xs, self.ys):
            return k
        return None

    # ---------------------------------------------------------------- queries
    def near(self, center: Sequence[float], statuses, radius: Optional[float] = None) -> list[int]:
        """Ids with a status in ``statuses`` within ``radius`` (default r_n) of ``center``.

        Sorted by ascending distance, ties broken by id.
        """
        r = self.r_n if radius is None else radius
        if isinstance(statuses, int):
            statuses = (statuses,)
        status = self.status
        hits = [(d, k) for d, k in self.grid.within(center[0], center[1], r, self.xs, self.ys)
                if status[k] in statuses]
        hits.sort()
        return [k for _, k in hits]

    def near_with_dist(self, center: Sequence[float], statuses,
                       radius: Optional[float] = None) -> list[tuple[float, int]]:
        r = self.r_n if radius is None else radius
        if isinstance(statuses, int):
            statuses = (statuses,)
        status = self.status
        return [(d, k) for d, k in self.grid.within(center[0], center[1], r, self.xs, self.ys)
                if status[k] in statuses]

    def neighbors(self, i: int) -> list[tuple[float, int]]:
        """(distance, id) pairs within r_n of sample ``i`` (itself included), sorted by id."""
        hits = self._nbrs.get(i)
        if hits is None and self._pre is not None and i < self._pre[3]:
            cuts, dl, bl, _ = self._pre
            lo, hi = cuts[i], cuts[i + 1]
            hits = self._nbrs[i] = list(zip(dl[lo:hi], bl[lo:hi]))
        elif hits is None:
            hits = self.grid.within(self.xs[i], self.ys[i], self.r_n, self.xs, self.ys)
            hits.sort(key=lambda h: h[1])
            self._nbrs[i] = hits
        return hits

    def precompute_neighbors(self) -> None:
        """Compute every sample's r_n-neighborhood in one vectorized pass.

        Per-node lists are still materialized lazily by ``neighbors``.
        """
        pts = np.column_stack((self.xs, self.ys))
        pairs = cKDTree(pts).query_pairs(self.r_n, output_type="ndarray")
        n = len(pts)
        a = np.concatenate((pairs[:, 0], pairs[:, 1], np.arange(n)))
        b = np.concatenate((pairs[:, 1], pairs[:, 0], np.arange(n)))
        o = np.argsort(a * n + b)
        a, b = a[o], b[o]
        d = np.hypot(pts[b, 0] - pts[a, 0], pts[b, 1] - pts[a, 1])
        self._pre = (np.searchsorted(a, np.arange(n + 1)).tolist(), d.tolist(), b.tolist(), n)
        self._nbrs.clear()

    def near_id(self, i: int, statuses) -> list[int]:
        """Ids within r_n of sample ``i`` whose status is in ``statuses``, ascending by id.

        Served from the neighbor cache; every caller either takes an explicit argmin
        or only needs a deterministic order.
        """
        status = self.status
        return [k for _, k in self.neighbors(i) if status[k] in statuses]

    def near_id_with_dist(self, i: int, statuses) -> list[tuple[float, int]]:
        status = self.status
        return [(d, k) for d, k in self.neighbors(i) if status[k] in statuses]

    def dist(self, i: int, j: int) -> float:
        return math.hypot(self.xs[i] - self.xs[j], self.ys[i] - self.ys[j])

    def path_to(self, i: int) -> list[int]:
        out = [i]
        parent = self.parent
        while parent[out[-1]] is not None:
            out.append(parent[out[-1]])
            if len(out) > len(parent):
                raise TreeError("parent links contain a cycle")
        out.reverse()
        return out

    def is_ancestor(self, a: int, b: int) -> bool:
        """True if ``a`` lies on the root path of ``b`` (a node is its own ancestor)."""
        parent = self.parent
        k: Optional[int] = b
        steps = 0
        while k is not None:
            if k == a:
                return True
            k = parent[k]
            steps += 1
            if steps > len(parent):
                raise TreeError("parent links contain a cycle")
        return False

    def subtree(self, i: int) -> list[int]:
        out, stack = [], [i]
        children = self.children
        while stack:
            k = stack.pop()
            out.append(k)
            stack.extend(children[k])
        return out

    # ------------------------------------------------------------ open heap
    def set_status(self, i: int, s: NodeStatus) -> None:
        self.status[i] = s
        if s == OPEN:
            heapq.heappush(self._heap, (self.cost[i], i))

    def _set_cost(self, i: int, c: float) -> None:
        if self.cost[i] != c:
            self.cost[i] = c
            if self.status[i] == OPEN:
                heapq.heappush(self._heap, (c, i))

    def pop_min_open(self) -> Optional[int]:
        """Cheapest finite-cost open node, or None.

        Entries whose recorded cost no longer matches are reinserted at the current
        cost; entries for nodes that left the open set are dropped.
        """
        heap, cost, status = self._heap, self.cost, self.status
        while heap:
            c, i = heap[0]
            if status[i] != OPEN:
                heapq.heappop(heap)
                continue
            if c != cost[i]:
                heapq.heapreplace(heap, (cost[i], i))
                continue
            if c == INF:
                return None
            heapq.heappop(heap)
            return i
        return None

    # ------------------------------------------------------- structural edits
    def attach(self, parent: int, child: int, status: NodeStatus = OPEN_NEW) -> None:
        """Add an unvisited ``child`` to the tree below ``parent``."""
        if self.status[child] != UNVISITED:
            raise TreeError(f"node {child} is already in the tree")
        self.parent[child] = parent
        self.children[parent].append(child)
        self.elen[child] = self.dist(parent, child)
        pc = self.cost[parent]
        self.cost[child] = INF if (self.blocked[child] or pc == INF) else pc + self.elen[child]
        self.set_status(child, status)
        self.size += 1

    def update_parent_child(self, new_parent: int, child: int) -> None:
        if child == self.root:
            raise TreeError("the root has no parent")
        if not (self.in_tree(new_parent) and self.in_tree(child)):
            raise TreeError("both nodes must be in the tree")
        if self.is_ancestor(child, new_parent):
            raise TreeError(f"reparenting {child} under {new_parent} creates a cycle")
        old = self.parent[child]
        if old is not None:
            self.children[old].remove(child)
        self.parent[child] = new_parent
        self.children[new_parent].append(child)
        self.elen[child] = self.dist(new_parent, child)
        pc = self.cost[new_parent]
        self._set_cost(child, INF if (self.blocked[child] or pc == INF) else pc + self.elen[child])

    def recalculate_children_cost(self, i: int) -> None:
        """Depth-first cost refresh of every descendant of ``i``."""
        children, cost, blocked, elen = self.children, self.cost, self.blocked, self.elen
        stack = [i]
        while stack:
            k = stack.pop()
            ck = cost[k]
            for c in children[k]:
                self._set_cost(c, INF if (blocked[c] or ck == INF) else ck + elen[c])
                stack.append(c)

    def set_blocked(self, i: int) -> None:
        self.blocked[i] = True
        self._set_cost(i, INF)
        self.recalculate_children_cost(i)

    def set_unblocked(self, i: int) -> None:
        self.blocked[i] = False
        p = self.parent[i]
        if p is None:
            c = 0.0 if i == self.root else INF
        else:
            c = INF if self.cost[p] == INF else self.cost[p] + self.elen[i]
        self._set_cost(i, c)
        self.recalculate_children_cost(i)

    def reroot(self, new_root: int) -> None:
        """Flip the edge between the root and its child ``new_root``; refresh all costs."""
        old = self.root
        if self.parent[new_root] != old:
            raise TreeError(f"{new_root} is not a child of the root {old}")
        self.children[old].remove(new_root)
        self.parent[new_root] = None
        self.children[new_root].append(old)
        self.parent[old] = new_root
        self.elen[old] = self.elen[new_root]
        self.elen[new_root] = 0.0
        self.root = new_root
        self._set_cost(new_root, 0.0)
        self.recalculate_children_cost(new_root)

    # ---------------------------------------------------------------- debug
    def dump(self) -> str:
        lines = ["id,x,y,parent,cost,status,blocked"]
        for i in range(len(self)):
            p = "" if self.parent[i] is None else str(self.parent[i])
            lines.append(f"{i},{self.xs[i]!r},{self.ys[i]!r},{p},{self.cost[i]!r},"
                         f"{self.status[i].name},{int(self.blocked[i])}")
        return "\n".join(lines) + "\n"

    def check_invariants(self, tol: float = 1e-9) -> None:
        """Raise TreeError if links, costs or blocking closure are inconsistent."""
        n = len(self)
        if self.parent[self.root] is not None:
            raise TreeError("root has a parent")
        for i in range(n):
            p = self.parent[i]
            if p is not None and i not in self.children[p]:
                raise TreeError(f"{i} missing from children of {p}")
            for c in self.children[i]:
                if self.parent[c] != i:
                    raise TreeError(f"child {c} of {i} points to {self.parent[c]}")
            if self.status[i] == UNVISITED:
                if p is not None or self.children[i] or self.cost[i] != INF:
                    raise TreeError(f"unvisited node {i} has links or cost")
                continue
            if p is None and i != self.root:
                raise TreeError(f"tree node {i} is detached")
        # walk from the root: reaches every tree node once, checks path sums
        seen = 0
        stack = [(self.root, 0.0, self.blocked[self.root])]
        visited = set()
        while stack:
            k, acc, cut = stack.pop()
            if k in visited:
                raise TreeError("parent graph has a cycle")
            visited.add(k)
            seen += 1
            if cut:
                if self.cost[k] != INF:
                    raise TreeError(f"node {k} below a blocked node has finite cost")
            elif abs(self.cost[k] - acc) > tol:
                raise TreeError(f"node {k} cost {self.cost[k]} != path sum {acc}")
            for c in self.children[k]:
                stack.append((c, acc + self.dist(k, c), cut or self.blocked[c]))
        if seen != sum(1 for s in self.status if s != UNVISITED):
            raise TreeError("some tree nodes are unreachable from the root")
