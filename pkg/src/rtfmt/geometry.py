"""Configuration-space primitives for a point robot among rectangles and discs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np


class Config(NamedTuple):
    """A point in the plane, in meters."""

    x: float
    y: float


@dataclass(frozen=True)
class WorldBounds:
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"bounds must be positive, got {self.width}x{self.height}")

    def contains(self, p: Config) -> bool:
        return 0.0 <= p[0] <= self.width and 0.0 <= p[1] <= self.height


@dataclass(frozen=True)
class StaticObstacle:
    """Axis-aligned rectangle [xmin, xmax] x [ymin, ymax]."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def lo(self) -> Config:
        return Config(self.xmin, self.ymin)

    @property
    def hi(self) -> Config:
        return Config(self.xmax, self.ymax)

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)


RANDOM_DIRECTION = "random-direction"
VERTICAL_SWEEP = "vertical-sweep"
POLICIES = (RANDOM_DIRECTION, VERTICAL_SWEEP)


@dataclass
class DynamicObstacle:
    """Moving disc. ``heading`` is a unit vector; the policy decides how it changes."""

    center: Config
    radius: float
    speed: float
    policy: str = RANDOM_DIRECTION
    heading: Config = Config(1.0, 0.0)
    # seconds until the next random heading redraw (random-direction policy only)
    redraw_in: float = 0.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("obstacle radius must be positive")
        if self.speed < 0:
            raise ValueError("obstacle speed must be nonnegative")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown motion policy {self.policy!r}")
        n = math.hypot(*self.heading)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"heading must be a unit vector, norm={n}")
        self.center = Config(*self.center)
        self.heading = Config(*self.heading)


@dataclass
class RobotState:
    position: Config
    speed: float
    radius: float

    def __post_init__(self):
        if self.speed <= 0 or self.radius <= 0:
            raise ValueError("robot speed and radius must be positive")
        self.position = Config(*self.position)


@dataclass
class World:
    bounds: WorldBounds
    obstacles: Sequence[StaticObstacle]
    robot: RobotState
    start: Config
    goal: Config
    dynamic: list[DynamicObstacle] = field(default_factory=list)
    name: str = "custom"

    @property
    def inflation(self) -> float:
        return self.robot.radius


def dist(u: Sequence[float], v: Sequence[float]) -> float:
    return math.hypot(v[0] - u[0], v[1] - u[1])


def point_rect_distance(px: float, py: float, r: StaticObstacle) -> float:
    dx = max(r.xmin - px, 0.0, px - r.xmax)
    dy = max(r.ymin - py, 0.0, py - r.ymax)
    if dx == 0.0:
        return dy
    if dy == 0.0:
        return dx
    return math.hypot(dx, dy)


def point_segment_distance(px, py, ax, ay, bx, by) -> float:
    vx, vy = bx - ax, by - ay
    wx, wy = px - ax, py - ay
    vv = vx * vx + vy * vy
    if vv == 0.0:
        return math.hypot(wx, wy)
    t = (wx * vx + wy * vy) / vv
    if t <= 0.0:
        return math.hypot(wx, wy)
    if t >= 1.0:
        return math.hypot(px - bx, py - by)
    return math.hypot(wx - t * vx, wy - t * vy)


def _clip(ax, ay, bx, by, r: StaticObstacle) -> Optional[tuple[float, float]]:
    """Liang-Barsky: parameter interval of segment ab inside the closed rectangle."""
    t0, t1 = 0.0, 1.0
    dx, dy = bx - ax, by - ay
    for p, q in ((-dx, ax - r.xmin), (dx, r.xmax - ax), (-dy, ay - r.ymin), (dy, r.ymax - ay)):
        if p == 0.0:
            if q < 0.0:
                return None
        else:
            t = q / p
            if p < 0.0:
                if t > t1:
                    return None
                if t > t0:
                    t0 = t
            else:
                if t < t0:
                    return None
                if t < t1:
                    t1 = t
    return t0, t1


def _strictly_inside(px, py, r: StaticObstacle) -> bool:
    return r.xmin < px < r.xmax and r.ymin < py < r.ymax


def segment_intersects_rect(ax, ay, bx, by, r: StaticObstacle) -> bool:
    return _clip(ax, ay, bx, by, r) is not None


def segment_enters_interior(ax, ay, bx, by, r: StaticObstacle) -> bool:
    span = _clip(ax, ay, bx, by, r)
    if span is None:
        return False
    # a chord of a convex set has an interior midpoint unless it runs along the boundary
    tm = 0.5 * (span[0] + span[1])
    return _strictly_inside(ax + tm * (bx - ax), ay + tm * (by - ay), r)


def segment_rect_distance(ax, ay, bx, by, r: StaticObstacle) -> float:
    if segment_intersects_rect(ax, ay, bx, by, r):
        return 0.0
    # disjoint convex sets: the minimum is attained at a vertex of one of them
    d = min(point_rect_distance(ax, ay, r), point_rect_distance(bx, by, r))
    for cx, cy in ((r.xmin, r.ymin), (r.xmin, r.ymax), (r.xmax, r.ymin), (r.xmax, r.ymax)):
        d = min(d, point_segment_distance(cx, cy, ax, ay, bx, by))
    return d


def point_free(p: Sequence[float], world: World, inflation: Optional[float] = None) -> bool:
    """True iff ``p`` is in bounds and at least ``inflation`` from every rectangle.

    The free set is closed: a point exactly ``inflation`` away counts as free.
    Dynamic obstacles are ignored.
    """
    r = world.inflation if inflation is None else inflation
    px, py = p[0], p[1]
    b = world.bounds
    if not (0.0 <= px <= b.width and 0.0 <= py <= b.height):
        return False
    for o in world.obstacles:
        if o.xmin - r < px < o.xmax + r and o.ymin - r < py < o.ymax + r:
            if _strictly_inside(px, py, o) or point_rect_distance(px, py, o) < r:
                return False
    return True


def segment_free(u: Sequence[float], v: Sequence[float], world: World,
                 inflation: Optional[float] = None) -> bool:
    """Exact test of segment uv against rectangles inflated by ``inflation``."""
    r = world.inflation if inflation is None else inflation
    ax, ay, bx, by = u[0], u[1], v[0], v[1]
    b = world.bounds
    if not (0.0 <= ax <= b.width and 0.0 <= ay <= b.height
            and 0.0 <= bx <= b.width and 0.0 <= by <= b.height):
        return False
    lox, hix = (ax, bx) if ax <= bx else (bx, ax)
    loy, hiy = (ay, by) if ay <= by else (by, ay)
    for o in world.obstacles:
        if hix <= o.xmin - r or lox >= o.xmax + r or hiy <= o.ymin - r or loy >= o.ymax + r:
            continue
        if r > 0.0:
            if segment_rect_distance(ax, ay, bx, by, o) < r:
                return False
        elif segment_enters_interior(ax, ay, bx, by, o):
            return False
    return True


def node_blocked_by(p: Sequence[float], obstacle: DynamicObstacle, r_b: float) -> bool:
    if r_b <= 0:
        raise ValueError("blocking radius must be positive")
    return dist(p, obstacle.center) <= r_b


def discs_overlap(p: Sequence[float], r1: float, q: Sequence[float], r2: float) -> bool:
    return dist(p, q) < r1 + r2


def free_space_measure(world: World, resolution: int = 1000,
                       inflation: float = 0.0) -> float:
    """Area of the static free set, estimated by midpoint rasterization.

    ``resolution`` is the number of cells per axis. With ``inflation`` > 0 each
    rectangle is grown by that distance (rounded corners) before rasterizing.
    """
    if resolution < 100:
        raise ValueError("resolution must be at least 100 cells per axis")
    w, h = world.bounds.width, world.bounds.height
    xs = (np.arange(resolution) + 0.5) * (w / resolution)
    ys = (np.arange(resolution) + 0.5) * (h / resolution)
    occupied = np.zeros((resolution, resolution), dtype=bool)
    for o in world.obstacles:
        dx = np.maximum(np.maximum(o.xmin - xs, xs - o.xmax), 0.0)
        dy = np.maximum(np.maximum(o.ymin - ys, ys - o.ymax), 0.0)
        if inflation > 0.0:
            occupied |= np.hypot(dy[:, None], dx[None, :]) < inflation
        else:
            occupied |= (xs[None, :] > o.xmin) & (xs[None, :] < o.xmax) & \
                        (ys[:, None] > o.ymin) & (ys[:, None] < o.ymax)
    cell = (w / resolution) * (h / resolution)
    return float((~occupied).sum()) * cell
