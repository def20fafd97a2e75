"""Benchmark worlds: a serpentine maze and a room-and-pillar mine."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (RANDOM_DIRECTION, VERTICAL_SWEEP, Config, DynamicObstacle,
                       RobotState, StaticObstacle, World, WorldBounds)


@dataclass(frozen=True)
class EnvParams:
    """Per-environment constants shared by both planners."""

    robot_speed: float
    robot_radius: float
    r_b: float
    r_o: float
    # minimum node spacing for the RRT baseline
    r_s: float


MAZE_PARAMS = EnvParams(robot_speed=2.0, robot_radius=0.5, r_b=2.0, r_o=10.0, r_s=1.0)
MINE_PARAMS = EnvParams(robot_speed=4.0, robot_radius=1.5, r_b=14.0, r_o=50.0, r_s=3.0)
ENV_PARAMS = {"maze": MAZE_PARAMS, "mine": MINE_PARAMS}

MAZE_SIZE = 30.0
WALL = 1.0
BORDER = 0.5
REDRAW_PERIOD = 2.0


def _border(w: float, h: float, t: float) -> list[StaticObstacle]:
    return [StaticObstacle(0.0, 0.0, w, t), StaticObstacle(0.0, h - t, w, h),
            StaticObstacle(0.0, t, t, h - t), StaticObstacle(w - t, t, w, h - t)]


def random_heading(rng: np.random.Generator) -> Config:
    a = 2.0 * math.pi * rng.random()
    return Config(math.cos(a), math.sin(a))


def make_maze(seed: int = 0, dynamic: bool = True) -> World:
    """30 m square maze of four corridors joined at alternating ends.

    The goal sits halfway along the third corridor, so part of the free space
    lies beyond it. Obstacle start positions are fixed; the seed only picks
    their initial headings.
    """
    s, w = MAZE_SIZE, WALL
    walls = _border(s, s, BORDER)
    walls += [
        StaticObstacle(0.0, 7.5, 24.0, 7.5 + w),
        StaticObstacle(6.0, 15.0, s, 15.0 + w),
        StaticObstacle(0.0, 22.5, 24.0, 22.5 + w),
        # stubs that create dead-end pockets along the corridors
        StaticObstacle(12.0, 8.5, 12.0 + w, 12.0),
        StaticObstacle(18.0, 11.5, 18.0 + w, 15.0),
        StaticObstacle(9.0, 16.0, 9.0 + w, 19.5),
        StaticObstacle(15.0, 26.5, 15.0 + w, 29.5),
    ]
    p = MAZE_PARAMS
    robot = RobotState(Config(3.0, 3.0), p.robot_speed, p.robot_radius)
    world = World(WorldBounds(s, s), walls, robot, Config(3.0, 3.0), Config(16.0, 19.0),
                  name="maze")
    if dynamic:
        rng = np.random.default_rng(seed)
        speed = 0.5 * p.robot_speed
        for c in ((20.0, 4.0), (8.0, 12.0), (22.0, 11.0), (4.0, 18.5), (20.0, 20.0)):
            world.dynamic.append(DynamicObstacle(Config(*c), 0.5, speed, RANDOM_DIRECTION,
                                                 random_heading(rng), REDRAW_PERIOD))
    return world


MINE_HALL = 8.0
MINE_PILLAR = (24.0, 16.0)
MINE_GRID = (5, 3)


def make_mine(seed: int = 0, dynamic: bool = True) -> World:
    """Room-and-pillar layout: a 5 x 3 grid of pillars separated by 8 m hallways.

    One truck runs along each interior vertical hallway. Its height is drawn from
    the seed; it heads down if it starts in the upper half and up otherwise.
    """
    hall, (pw, ph), (nc, nr) = MINE_HALL, MINE_PILLAR, MINE_GRID
    width, height = hall + nc * (pw + hall), hall + nr * (ph + hall)
    pillars = []
    for i in range(nc):
        for j in range(nr):
            x0, y0 = hall + i * (pw + hall), hall + j * (ph + hall)
            pillars.append(StaticObstacle(x0, y0, x0 + pw, y0 + ph))
    p = MINE_PARAMS
    robot = RobotState(Config(4.0, 4.0), p.robot_speed, p.robot_radius)
    world = World(WorldBounds(width, height), pillars, robot, Config(4.0, 4.0),
                  Config(width - 4.0, height - 4.0), name="mine")
    if dynamic:
        rng = np.random.default_rng(seed)
        radius, speed = 2.5, 0.5 * p.robot_speed
        for i in range(1, nc):
            x = i * (pw + hall) + 0.5 * hall
            y = radius + rng.random() * (height - 2 * radius)
            heading = Config(0.0, -1.0) if y > 0.5 * height else Config(0.0, 1.0)
            world.dynamic.append(DynamicObstacle(Config(x, y), radius, speed, VERTICAL_SWEEP,
                                                 heading))
    return world


ENVIRONMENTS = {"maze": make_maze, "mine": make_mine}
