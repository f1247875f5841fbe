"""Random-waypoint mobility as precomputed piecewise-linear trajectories.

Each node starts at a uniform random position, pauses, then repeatedly picks
a uniform random waypoint, travels to it at a per-leg speed drawn uniformly
from the configured interval, and pauses again. Positions are evaluated
lazily from the leg list, so a trajectory is a pure function of its RNG
substream and the scenario parameters.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from dataclasses import dataclass

from .config import SimConfig

# Trajectories are built a little past the nominal duration because in-flight
# traffic is allowed to drain after the last origination.
_BUILD_MARGIN_S = 30.0


@dataclass(frozen=True, slots=True)
class Leg:
    t0: float
    t1: float
    x0: float
    y0: float
    x1: float
    y1: float
    speed: float  # 0 for pause legs


class Trajectory:
    """Piecewise-linear position function over a list of legs."""

    def __init__(self, legs: list[Leg]) -> None:
        if not legs:
            raise ValueError("trajectory needs at least one leg")
        self.legs = legs
        self._starts = [leg.t0 for leg in legs]

    def position(self, t: float) -> tuple[float, float]:
        if t <= self._starts[0]:
            leg = self.legs[0]
            return leg.x0, leg.y0
        i = bisect_right(self._starts, t) - 1
        leg = self.legs[i]
        if t >= leg.t1:
            return leg.x1, leg.y1
        frac = (t - leg.t0) / (leg.t1 - leg.t0)
        return leg.x0 + (leg.x1 - leg.x0) * frac, leg.y0 + (leg.y1 - leg.y0) * frac


def rwp_trajectory(rng: random.Random, config: SimConfig) -> Trajectory:
    """Build one node's random-waypoint trajectory covering the whole run."""
    horizon = config.sim_duration_s + _BUILD_MARGIN_S
    pause = config.pause_time_s
    x, y = rng.uniform(0.0, config.area_width_m), rng.uniform(0.0, config.area_height_m)
    legs: list[Leg] = []
    t = 0.0
    if pause > 0.0:
        legs.append(Leg(t, t + pause, x, y, x, y, 0.0))
        t += pause
    while t < horizon:
        wx = rng.uniform(0.0, config.area_width_m)
        wy = rng.uniform(0.0, config.area_height_m)
        dist = math.hypot(wx - x, wy - y)
        if dist == 0.0:
            continue
        speed = rng.uniform(config.speed_min_mps, config.speed_max_mps)
        travel = dist / speed
        legs.append(Leg(t, t + travel, x, y, wx, wy, speed))
        t += travel
        x, y = wx, wy
        if pause > 0.0 and t < horizon:
            legs.append(Leg(t, t + pause, x, y, x, y, 0.0))
            t += pause
    if not legs:
        legs.append(Leg(0.0, horizon, x, y, x, y, 0.0))
    return Trajectory(legs)
