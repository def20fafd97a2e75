"""Batch free-space sampling and the PRM* style connection radius."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Config, World, point_free

UNIT_DISC_AREA = math.pi


@dataclass(frozen=True)
class SamplerParams:
    N: int
    gamma_s: float = 1.1
    seed: int = 0
    d: int = 2
    zeta_d: float = UNIT_DISC_AREA

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need at least 2 samples")
        if self.gamma_s <= 1.0:
            raise ValueError("gamma_s must exceed 1")
        if self.d != 2 or self.zeta_d != UNIT_DISC_AREA:
            raise ValueError("only the planar case (d=2, zeta=pi) is supported")


class SamplingError(RuntimeError):
    pass


def neighborhood_radius(N: int, d: int, mu_free: float, gamma_s: float,
                        zeta_d: float = UNIT_DISC_AREA) -> float:
    """Connection radius r_n for N samples in a free region of measure ``mu_free``.

    r_n = gamma_s * 2 * (1 + 1/d)^(1/d) * (mu_free / zeta_d)^(1/d) * (ln N / N)^(1/d)
    """
    if N < 2:
        raise ValueError("radius is degenerate for N < 2")
    if mu_free <= 0:
        raise ValueError("free space measure must be positive")
    inv_d = 1.0 / d
    return (gamma_s * 2.0 * (1.0 + inv_d) ** inv_d * (mu_free / zeta_d) ** inv_d
            * (math.log(N) / N) ** inv_d)


def sample_free(world: World, params: SamplerParams, rng: np.random.Generator | None = None,
                inflation: float | None = None) -> list[Config]:
    """Draw ``params.N`` uniform collision-free configurations, then append start and goal.

    Only static obstacles are considered. Rejected draws are not counted towards N.
    """
    if rng is None:
        rng = np.random.default_rng(params.seed)
    r = world.inflation if inflation is None else inflation
    for p in (world.start, world.goal):
        if not point_free(p, world, r):
            raise ValueError(f"{p} is not in free space")
    w, h = world.bounds.width, world.bounds.height
    out: list[Config] = []
    budget = 1000 * params.N
    attempts = 0
    batch = max(64, params.N)
    while len(out) < params.N:
        pts = rng.random((batch, 2)) * (w, h)
        for x, y in pts.tolist():
            attempts += 1
            if attempts > budget:
                raise SamplingError(
                    f"rejection sampling exceeded {budget} attempts ({len(out)} accepted)")
            if point_free((x, y), world, r):
                out.append(Config(x, y))
                if len(out) == params.N:
                    break
    out.append(Config(*world.start))
    out.append(Config(*world.goal))
    return out
