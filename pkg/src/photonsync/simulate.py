"""Stochastic session generator: correlated streams plus ground truth.

Pairs are a homogeneous Poisson process at r_c (the transmission = 1
coincidence rate). Alice records every pair photon; Bob keeps each with
probability `transmission`. Uncorrelated singles are added at r_a - r_c on
Alice and at (r_b - r_c) * transmission plus r_dark on Bob. Each detection
gets Gaussian timing noise of sigma_det / sqrt(2) per arm, so the
coincidence peak has RMS sigma_det. Bob's timestamps run through the slave
clock model and both streams are cut into packages of t_acq; Bob cuts on
his own (slave) clock. Everything is deterministic given the seed.
"""
from __future__ import annotations

import numpy as np

from .clock import ClockModel, GroundTruth, SkewWalk, local_time
from .errors import ClockModelError, ConfigError
from .scenario import ScenarioConfig
from .timetags import PS_PER_S, DataPackage, PackageStream, Party

# grid step of the skew random walk (s); one package by default
WALK_STEP = 0.1


def _poisson_times(rng: np.random.Generator, rate: float, duration: float) -> np.ndarray:
    if rate <= 0:
        return np.zeros(0)
    n = rng.poisson(rate * duration)
    return np.sort(rng.uniform(0.0, duration, size=n))


def _cut_packages(times_ps: np.ndarray, n_packages: int, t_acq_ps: int) -> tuple[DataPackage, ...]:
    edges = np.arange(n_packages + 1, dtype=np.int64) * t_acq_ps
    bounds = np.searchsorted(times_ps, edges, side="left")
    return tuple(
        DataPackage(
            index=k,
            start=int(edges[k]),
            duration=t_acq_ps,
            timestamps=times_ps[bounds[k]:bounds[k + 1]],
        )
        for k in range(n_packages)
    )


def generate_session(config: ScenarioConfig) -> tuple[PackageStream, PackageStream, GroundTruth]:
    """Generate (alice, bob, truth) for one session."""
    n_packages = int(config.duration / config.t_acq + 1e-9)
    if n_packages < 1:
        raise ConfigError("duration shorter than one package")
    duration = n_packages * config.t_acq
    t_acq_ps = int(round(config.t_acq * PS_PER_S))

    seeds = np.random.SeedSequence(config.seed).spawn(6)
    rng_pairs, rng_thin, rng_noise, rng_a, rng_b, rng_walk = (
        np.random.default_rng(s) for s in seeds
    )

    walk = SkewWalk.sample(rng_walk, config.clock.rw_sigma, duration, WALK_STEP)
    config.clock.check_monotonic(duration, extra_skew=float(np.max(np.abs(walk.w))))
    if local_time(config.clock, 0.0, walk) < 0:
        raise ConfigError("negative initial clock offset would produce negative timestamps")

    sigma_arm = config.sigma_det / np.sqrt(2.0)

    pair_t = _poisson_times(rng_pairs, config.r_c, duration)
    kept = rng_thin.random(pair_t.size) < config.transmission

    alice_pair_det = pair_t + rng_noise.normal(0.0, sigma_arm, pair_t.size)
    bob_pair_det = pair_t[kept] + rng_noise.normal(0.0, sigma_arm, int(kept.sum()))

    alice_extra = _poisson_times(rng_a, max(config.r_a - config.r_c, 0.0), duration)
    bob_extra_rate = max(config.r_b - config.r_c, 0.0) * config.transmission + config.r_dark
    bob_extra = _poisson_times(rng_b, bob_extra_rate, duration)

    # session cut: drop detections that noise pushed outside [0, duration)
    def _clip(t):
        return t[(t >= 0.0) & (t < duration)]

    alice_all = np.sort(np.concatenate([_clip(alice_pair_det), alice_extra]))
    bob_true_sorted = np.sort(np.concatenate([_clip(bob_pair_det), bob_extra]))

    bob_local = local_time(config.clock, bob_true_sorted, walk)

    alice_ps = np.rint(alice_all * PS_PER_S).astype(np.int64)
    bob_ps = np.rint(bob_local * PS_PER_S).astype(np.int64)
    if bob_ps.size and bob_ps[0] < 0:
        raise ClockModelError("clock offset drove timestamps negative")

    alice_stream = PackageStream(Party.ALICE, _cut_packages(alice_ps, n_packages, t_acq_ps))
    bob_stream = PackageStream(Party.BOB, _cut_packages(bob_ps, n_packages, t_acq_ps))

    # oracle bookkeeping for the surviving pairs, in emission order
    a_det = alice_pair_det[kept]
    b_det = bob_pair_det
    in_session = (a_det >= 0) & (a_det < duration) & (b_det >= 0) & (b_det < duration)
    a_det, b_det = a_det[in_session], b_det[in_session]
    b_loc = local_time(config.clock, b_det, walk)
    last_edge_ps = n_packages * t_acq_ps
    a_tag = np.rint(a_det * PS_PER_S).astype(np.int64)
    b_tag = np.rint(b_loc * PS_PER_S).astype(np.int64)
    in_pkgs = (b_tag >= 0) & (b_tag < last_edge_ps) & (a_tag < last_edge_ps)
    truth = GroundTruth(
        clock=config.clock,
        walk=walk,
        duration=duration,
        pair_emission_t=pair_t,
        alice_pair_tags=a_tag[in_pkgs],
        bob_pair_tags=b_tag[in_pkgs],
        bob_pair_detection_t=b_det[in_pkgs],
    )
    return alice_stream, bob_stream, truth


def coincidence_oracle(truth: GroundTruth) -> tuple[np.ndarray, np.ndarray]:
    """Matched (t_alice, t_bob) tag values of the surviving pairs, in ps.

    Bypasses estimation entirely; used to score the pipeline.
    """
    return truth.alice_pair_tags, truth.bob_pair_tags
