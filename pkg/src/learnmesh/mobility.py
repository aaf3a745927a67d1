"""Random waypoint mobility over a rectangular field.

Every node walks in a straight line toward a uniformly drawn waypoint at a
speed drawn from its range, pauses there for a drawn number of ticks, then
draws the next waypoint. All randomness flows through one generator in fixed
node-index order, so a seed fully determines every trajectory; the geometry
inner loop itself never draws.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import kernels


@dataclass(frozen=True)
class MotionSpec:
    speed_min: float
    speed_max: float
    pause_min: int
    pause_max: int
    radio_range: float
    position: Optional[Tuple[float, float]] = None  # drawn uniformly when absent

    def __post_init__(self):
        if not 0 <= self.speed_min <= self.speed_max:
            raise ValueError("need 0 <= speed_min <= speed_max")
        if not 0 <= self.pause_min <= self.pause_max:
            raise ValueError("need 0 <= pause_min <= pause_max")
        if self.radio_range <= 0:
            raise ValueError("radio_range must be positive")


class RandomWaypointField:
    """Positions, waypoints, and contact geometry for one scenario's nodes."""

    def __init__(
        self, width: float, height: float, specs: List[MotionSpec], rng: random.Random
    ):
        if width <= 0 or height <= 0:
            raise ValueError("field dimensions must be positive")
        self.width = float(width)
        self.height = float(height)
        self.specs = list(specs)
        self.rng = rng
        n = len(self.specs)
        self.x = np.empty(n, dtype=np.float64)
        self.y = np.empty(n, dtype=np.float64)
        self.tx = np.empty(n, dtype=np.float64)
        self.ty = np.empty(n, dtype=np.float64)
        self.speed = np.empty(n, dtype=np.float64)
        self.radius = np.empty(n, dtype=np.float64)
        self.pause = [0] * n
        self.moving = [True] * n
        for i, spec in enumerate(self.specs):
            if spec.position is not None:
                self.x[i], self.y[i] = spec.position
            else:
                self.x[i] = rng.uniform(0.0, self.width)
                self.y[i] = rng.uniform(0.0, self.height)
            self.tx[i] = rng.uniform(0.0, self.width)
            self.ty[i] = rng.uniform(0.0, self.height)
            self.speed[i] = rng.uniform(spec.speed_min, spec.speed_max)
            self.radius[i] = spec.radio_range

    def __len__(self) -> int:
        return len(self.specs)

    def _depart(self, i: int) -> None:
        spec = self.specs[i]
        self.tx[i] = self.rng.uniform(0.0, self.width)
        self.ty[i] = self.rng.uniform(0.0, self.height)
        self.speed[i] = self.rng.uniform(spec.speed_min, spec.speed_max)
        self.moving[i] = True

    def step(self) -> List[int]:
        """Advance one tick; returns the indices that reached a waypoint.

        Pause counts whole stationary ticks after the arrival tick: a node
        arriving with pause 0 departs on the very next tick.
        """
        for i in range(len(self.specs)):
            if not self.moving[i]:
                if self.pause[i] == 0:
                    self._depart(i)
                else:
                    self.pause[i] -= 1
        arrived = kernels.advance_positions(
            self.x, self.y, self.tx, self.ty, self.speed
        )
        fresh = []
        for i in arrived:
            if self.moving[i]:  # paused nodes re-report their waypoint; ignore
                self.moving[i] = False
                spec = self.specs[i]
                self.pause[i] = self.rng.randint(spec.pause_min, spec.pause_max)
                fresh.append(i)
        return fresh

    def contacts(self) -> List[Tuple[int, int]]:
        """Current unit-disk contact pairs, lexicographic, boundary inclusive."""
        return kernels.contact_pairs(self.x, self.y, self.radius)

    def partition_labels(self) -> List[int]:
        """Connected-component label (smallest member index) per node."""
        return kernels.component_labels(len(self.specs), self.contacts())

    def positions(self) -> List[Tuple[float, float]]:
        return [(float(self.x[i]), float(self.y[i])) for i in range(len(self.specs))]
