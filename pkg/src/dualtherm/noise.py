"""Seeded random processes layered on the deterministic forward models.

Three noise sources: photon shot noise (exact Poisson sampling), slow
multiplicative intensity drift (mean-reverting log-normal, standing in for
laser power and collection-efficiency wander), and a piecewise-constant
fluctuating magnetic-field projection that perturbs the ODMR channel.

Randomness flows through explicitly passed :class:`numpy.random.Generator`
objects; nothing here touches global RNG state.  ``subsystem_generators``
derives one independent child stream per noise subsystem from a single master
seed, so changing how often one subsystem draws cannot perturb the draws any
other subsystem sees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

RngSeed = int
"""Master seed: an unsigned 64-bit integer."""

#: spawn order of the per-subsystem child streams; fixed, part of the
#: determinism contract
SUBSYSTEMS = ("odmr", "pl", "drift", "bfield")


def validate_seed(seed: int) -> int:
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return seed


def subsystem_generators(master_seed: RngSeed) -> dict[str, np.random.Generator]:
    """One independent child generator per noise subsystem.

    The children are spawned from a single ``SeedSequence`` in the fixed
    order of ``SUBSYSTEMS``, so each subsystem's stream depends only on the
    master seed, never on how many draws the other subsystems consumed.
    """
    validate_seed(master_seed)
    children = np.random.SeedSequence(master_seed).spawn(len(SUBSYSTEMS))
    return {name: np.random.default_rng(child) for name, child in zip(SUBSYSTEMS, children)}


def sample_poisson_counts(
    expected: NDArray[np.float64], rng: np.random.Generator
) -> NDArray[np.int64]:
    """Draw one Poisson count per expected value.

    Sampling is exact at every mean (numpy's generator uses inversion for
    small means and a transformed-rejection sampler above that); no normal
    approximation is involved at any count level.
    """
    arr = np.asarray(expected, dtype=np.float64)
    if arr.size and float(np.min(arr)) < 0:
        raise ValueError(f"expected counts must be >= 0, got min {np.min(arr)}")
    return rng.poisson(arr).astype(np.int64)


@dataclass(frozen=True)
class DriftState:
    """Mean-reverting multiplicative intensity drift.

    The log of ``current_factor`` follows an Ornstein-Uhlenbeck process with
    reversion rate ``reversion_rate`` (1/s) and stationary standard deviation
    ``stationary_rel_std``; the factor multiplies every expected count.  The
    defaults keep a 30-minute trace inside a 0.41% peak-to-peak band in well
    over 95% of seeded runs.
    """

    current_factor: float = 1.0
    reversion_rate: float = 1.0 / 300.0
    stationary_rel_std: float = 7e-4

    def __post_init__(self) -> None:
        if not self.current_factor > 0:
            raise ValueError(f"current_factor must be > 0, got {self.current_factor}")
        if not self.reversion_rate > 0:
            raise ValueError(f"reversion_rate must be > 0, got {self.reversion_rate}")
        if self.stationary_rel_std < 0:
            raise ValueError(f"stationary_rel_std must be >= 0, got {self.stationary_rel_std}")


def drift_step(state: DriftState, dt_s: float, rng: np.random.Generator) -> DriftState:
    """Advance the drift process by ``dt_s`` using its exact discretization.

    ``x' = x e^(-theta dt) + sigma sqrt(1 - e^(-2 theta dt)) N(0, 1)`` for the
    log-factor ``x``, which makes the update consistent under step splitting:
    two steps of ``dt`` and one step of ``2 dt`` share the same law.
    """
    if not dt_s > 0:
        raise ValueError(f"dt_s must be > 0, got {dt_s}")
    if state.stationary_rel_std == 0:
        return state
    decay = math.exp(-state.reversion_rate * dt_s)
    x = math.log(state.current_factor) * decay
    x += state.stationary_rel_std * math.sqrt(1.0 - decay * decay) * rng.standard_normal()
    return replace(state, current_factor=math.exp(x))


@dataclass(frozen=True)
class BFieldProcess:
    """Piecewise-constant fluctuating magnetic-field projection.

    Every ``dwell_s`` seconds the field is redrawn: magnitude uniform on
    ``[0, b_max]``, direction isotropic, so the projection onto the NV axis is
    ``|B| * u`` with ``u`` uniform on ``[-1, 1]``.  Between resample instants
    the projection is constant.  ``time_since_resample_s`` carries the phase
    of the resample clock across steps.
    """

    b_max_mt: float
    dwell_s: float = 0.5
    current_projection_mt: float = 0.0
    time_since_resample_s: float = 0.0

    def __post_init__(self) -> None:
        if self.b_max_mt < 0:
            raise ValueError(f"b_max_mt must be >= 0, got {self.b_max_mt}")
        if not self.dwell_s > 0:
            raise ValueError(f"dwell_s must be > 0, got {self.dwell_s}")
        if abs(self.current_projection_mt) > self.b_max_mt:
            raise ValueError(
                f"|current_projection_mt| = {abs(self.current_projection_mt)} exceeds b_max_mt = {self.b_max_mt}"
            )
        if self.time_since_resample_s < 0:
            raise ValueError("time_since_resample_s must be >= 0")


def bfield_resample(proc: BFieldProcess, rng: np.random.Generator) -> BFieldProcess:
    """Redraw the field immediately, resetting the resample clock."""
    magnitude = rng.uniform(0.0, proc.b_max_mt)
    direction = rng.uniform(-1.0, 1.0)
    return replace(
        proc,
        current_projection_mt=magnitude * direction,
        time_since_resample_s=0.0,
    )


def bfield_step(proc: BFieldProcess, dt_s: float, rng: np.random.Generator) -> BFieldProcess:
    """Advance the field clock by ``dt_s``, redrawing once per elapsed dwell.

    The projection changes only at resample instants; with ``b_max_mt = 0``
    it is identically zero although the draws are still consumed, keeping the
    stream alignment of a run independent of the field amplitude.
    """
    if not dt_s > 0:
        raise ValueError(f"dt_s must be > 0, got {dt_s}")
    elapsed = proc.time_since_resample_s + dt_s
    projection = proc.current_projection_mt
    while elapsed >= proc.dwell_s:
        magnitude = rng.uniform(0.0, proc.b_max_mt)
        direction = rng.uniform(-1.0, 1.0)
        projection = magnitude * direction
        elapsed -= proc.dwell_s
    return replace(
        proc,
        current_projection_mt=projection,
        time_since_resample_s=elapsed,
    )
