"""Parametric local-clock model with invertible ground truth.

The slave clock reads

    local(t) = t + offset_t0 + skew_u * t + drift_a * t^2 / 2 + W(t)

where t is true time in seconds and W integrates a random walk of the
instantaneous skew. The walk is piecewise constant on a fixed grid, which
keeps the trajectory exactly integrable: the ground truth for skew and
offset is closed-form at any t.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ClockModelError

PS_PER_S = 10**12


@dataclass(frozen=True)
class ClockModel:
    offset_t0: float = 0.0  # s, initial timing offset
    skew_u: float = 0.0     # s/s, constant frequency difference
    drift_a: float = 0.0    # s/s^2, rate of change of the skew
    rw_sigma: float = 0.0   # (s/s)/sqrt(s), random-walk intensity of the skew

    def check_monotonic(self, duration: float, extra_skew: float = 0.0) -> None:
        worst = abs(self.skew_u) + abs(self.drift_a) * duration + abs(extra_skew)
        if worst >= 1.0:
            raise ClockModelError(
                f"|skew| + |drift|*T = {worst:.3g} >= 1; local clock would not be monotonic"
            )


@dataclass(frozen=True)
class SkewWalk:
    """Piecewise-constant skew fluctuation w(t) on a uniform grid.

    `w[k]` applies on [k*step, (k+1)*step); `w_integral[k]` is the exact
    integral of w up to the k-th grid edge.
    """

    step: float
    w: np.ndarray
    w_integral: np.ndarray = field(init=False)

    def __post_init__(self):
        integral = np.concatenate(([0.0], np.cumsum(self.w) * self.step))
        object.__setattr__(self, "w_integral", integral)

    @classmethod
    def zero(cls, duration: float, step: float) -> "SkewWalk":
        n = max(int(np.ceil(duration / step)), 1)
        return cls(step=step, w=np.zeros(n))

    @classmethod
    def sample(cls, rng: np.random.Generator, intensity: float, duration: float,
               step: float) -> "SkewWalk":
        n = max(int(np.ceil(duration / step)), 1)
        if intensity == 0.0:
            return cls(step=step, w=np.zeros(n))
        increments = rng.normal(0.0, intensity * np.sqrt(step), size=n)
        # w starts at 0 on the first interval
        w = np.concatenate(([0.0], np.cumsum(increments[:-1])))
        return cls(step=step, w=w)

    def skew_at(self, t):
        k = np.clip((np.asarray(t, dtype=float) / self.step).astype(int), 0, len(self.w) - 1)
        return self.w[k]

    def integral_at(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip((t / self.step).astype(int), 0, len(self.w) - 1)
        return self.w_integral[k] + self.w[k] * (t - k * self.step)


def local_time(clock: ClockModel, t, walk: SkewWalk | None = None):
    """Map true time (s) to the slave clock's reading (s). Vectorized."""
    t = np.asarray(t, dtype=float)
    out = t + clock.offset_t0 + clock.skew_u * t + 0.5 * clock.drift_a * t * t
    if walk is not None and clock.rw_sigma != 0.0:
        out = out + walk.integral_at(t)
    if out.ndim and out.size > 1:
        dt, dout = np.diff(t), np.diff(out)
        if np.any(dout[dt >= 0] < 0):
            raise ClockModelError("local clock ran backwards over the requested span")
    return out


@dataclass(frozen=True)
class GroundTruth:
    """Oracle view of one generated session.

    Pair arrays are aligned: entry i is the i-th surviving pair, with the
    Alice tag value, the Bob tag value (slave clock, ps), the true emission
    time, and the true detection time on Bob's arm (both in seconds).
    """

    clock: ClockModel
    walk: SkewWalk
    duration: float
    pair_emission_t: np.ndarray      # s, all emitted pairs
    alice_pair_tags: np.ndarray      # ps, surviving pairs as recorded by Alice
    bob_pair_tags: np.ndarray        # ps, surviving pairs as recorded by Bob (local clock)
    bob_pair_detection_t: np.ndarray # s, true detection times behind those Bob tags

    def true_skew(self, t):
        t = np.asarray(t, dtype=float)
        base = self.clock.skew_u + self.clock.drift_a * t
        if self.clock.rw_sigma != 0.0:
            return base + self.walk.skew_at(t)
        return base

    def true_offset(self, t):
        """local(t) - t, in seconds."""
        return local_time(self.clock, t, self.walk) - np.asarray(t, dtype=float)

    def local_time(self, t):
        return local_time(self.clock, t, self.walk)

    @property
    def n_pairs(self) -> int:
        return int(self.alice_pair_tags.size)
