"""Closed-form jitter and signal-to-noise relations.

All quantities are SI: seconds, counts per second, dimensionless ratios.
Conversion from picosecond tick space happens at the caller. These functions
double as oracles for the simulation cross-checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


def sync_jitter(du: float, t_acq: float) -> float:
    """RMS timing error added by an uncorrected clock skew du over t_acq."""
    if t_acq <= 0:
        raise DomainError("t_acq must be positive")
    return 0.5 * du * t_acq


def total_jitter(sigma_det: float, sigma_sync: float) -> float:
    """Quadrature sum of detector and synchronization jitter."""
    if sigma_det < 0 or sigma_sync < 0:
        raise DomainError("jitter contributions must be non-negative")
    return float(np.hypot(sigma_det, sigma_sync))


def peak_height_ratio(sigma_det: float, sigma_sync: float) -> float:
    """Correlation peak height relative to its skew-free value."""
    if sigma_det <= 0:
        raise DomainError("sigma_det must be positive")
    return 1.0 / np.sqrt(1.0 + (sigma_sync / sigma_det) ** 2)


def car(transmission: float, r_a: float, r_b: float, r_c: float,
        r_dark: float, sigma: float) -> float:
    """Coincidence-to-accidentals ratio at a given channel transmission.

    car = r_c T / (2 r_a r_b T sigma + r_dark); dark counts do not scale
    with the transmission, so loss only hurts when r_dark > 0.
    """
    if not 0.0 < transmission <= 1.0:
        raise DomainError("transmission must be in (0, 1]")
    if min(r_a, r_b, r_c, r_dark) < 0:
        raise DomainError("rates must be non-negative")
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    denom = 2.0 * r_a * r_b * transmission * sigma + r_dark
    if denom == 0.0:
        raise DomainError("zero accidental rate")
    return r_c * transmission / denom


def car_peak(r_a: float, r_b: float, r_c: float, sigma: float) -> float:
    """Maximum coincidence-to-accidentals ratio of a skew-free peak."""
    if sigma <= 0 or r_a <= 0 or r_b <= 0:
        raise DomainError("rates and sigma must be positive")
    return r_c / (2.0 * r_a * r_b * sigma)


def max_skew(r_c: float, r_a: float, r_b: float, s_threshold: float) -> float:
    """Largest uncorrected skew that keeps the peak above a significance."""
    if min(r_c, r_a, r_b, s_threshold) <= 0:
        raise DomainError("all inputs must be positive")
    return r_c / (r_a * r_b * s_threshold)


def gaussian_pdf(t, sigma: float):
    """Unit-area Gaussian density."""
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    t = np.asarray(t, dtype=float)
    return np.exp(-(t * t) / (2.0 * sigma * sigma)) / np.sqrt(2.0 * np.pi * sigma * sigma)


@dataclass(frozen=True)
class JitterBudget:
    """Quadrature budget of the total system jitter.

    Coherence-time and tagger contributions default to zero; they are far
    below the detector jitter in the regimes covered here, but the full
    quadrature stays available.
    """

    sigma_det: float
    sigma_sync: float = 0.0
    sigma_coh: float = 0.0
    sigma_tt: float = 0.0
    sigma_total: float = field(init=False)

    def __post_init__(self):
        total = float(
            np.sqrt(
                self.sigma_coh**2
                + self.sigma_tt**2
                + self.sigma_det**2
                + self.sigma_sync**2
            )
        )
        object.__setattr__(self, "sigma_total", total)


@dataclass(frozen=True)
class LiveLimits:
    """Achievable jitter during live tracking, split by origin."""

    delta_tau: float    # s, uncertainty of one peak location
    du_meas: float      # s/s, skew uncertainty from two locations
    sigma_meas: float   # s, jitter from the location measurement error
    du_drift: float     # s/s, skew accumulated between feedback updates
    sigma_drift: float  # s, jitter from the clock drift
    sigma_sync: float   # s, combined

    @classmethod
    def build(cls, delta_tau, du_meas, sigma_meas, du_drift, sigma_drift):
        return cls(
            delta_tau=delta_tau,
            du_meas=du_meas,
            sigma_meas=sigma_meas,
            du_drift=du_drift,
            sigma_drift=sigma_drift,
            sigma_sync=float(np.hypot(sigma_meas, sigma_drift)),
        )


def peak_location_uncertainty(sigma: float, n_events: float) -> float:
    """Scatter of a fitted peak location from n correlation events."""
    if n_events <= 1:
        raise DomainError("need more than one correlation event")
    return sigma / np.sqrt(n_events - 1.0)


def live_limits(sigma: float, r_c: float, t_acq: float, t_meas: float,
                t_feed: float, drift: float) -> LiveLimits:
    """Tracking-jitter floor for given rates, timing, and clock drift.

    The location error of a per-package peak propagates into the skew
    estimate over t_meas and back into timing over t_acq; drift accumulates
    unseen over one feedback period.
    """
    if sigma <= 0 or t_acq <= 0 or t_meas <= 0 or t_feed <= 0:
        raise DomainError("sigma and times must be positive")
    n = r_c * t_acq
    if n <= 1:
        raise DomainError("fewer than two correlation events per package")
    delta_tau = peak_location_uncertainty(sigma, n)
    du_meas = np.sqrt(2.0) * delta_tau / t_meas
    sigma_meas = 0.5 * du_meas * t_acq
    du_drift = drift * t_feed
    sigma_drift = 0.5 * du_drift * t_acq
    return LiveLimits.build(delta_tau, du_meas, sigma_meas, du_drift, sigma_drift)
