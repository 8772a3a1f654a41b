"""Reproducible disorder realizations and per-realization seed derivation.

Angles are drawn with a counter-based SplitMix64 generator (Steele, Lea and
Burrows' published finalizer constants) so that a (spec, seed) pair maps to a
bit-identical realization on every platform.  The platform RNG is never used.

Draw order is canonical: for site q ascending, theta_q uses counter 2q and
phi_q uses counter 2q+1.  When the chiral constraint is off, the independent
pre-shift angles occupy the trailing counter block [2N, 3N), which keeps the
(theta, phi) draws identical to the constrained case at equal seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .lattice import WalkSpec

__all__ = [
    "AngleField",
    "EnsemblePlan",
    "derive_seed",
    "sample_realization",
    "spec_digest",
    "uniform_from_counters",
]

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)   # odd increment of the SplitMix64 stream
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on uint64 values (vectorized)."""
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def derive_seed(master_seed: int, index: int) -> int:
    """Stateless per-realization seed: finalize(master XOR index * gamma).

    The odd multiplier makes ``index -> index * gamma`` a bijection on 64-bit
    words, and the finalizer is a bijection too, so distinct indices always
    yield distinct seeds for a fixed master seed.
    """
    if index < 0:
        raise ValueError(f"index must be >= 0, got {index}")
    with np.errstate(over="ignore"):
        mixed = np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF) ^ (np.uint64(index) * _GAMMA)
        return int(_mix64(mixed))


def uniform_from_counters(seed: int, start: int, count: int) -> np.ndarray:
    """Uniform [0, 1) doubles for counters start..start+count-1 of a seed.

    Each counter k produces finalize(seed + (k+1)*gamma); the top 53 bits are
    scaled by 2**-53, the fixed mantissa convention that keeps draws
    platform-identical.
    """
    with np.errstate(over="ignore"):
        counters = np.arange(start + 1, start + count + 1, dtype=np.uint64)
        words = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + counters * _GAMMA)
    return (words >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def spec_digest(spec: WalkSpec) -> str:
    """Content hash of the generating spec (first 16 hex chars of sha256)."""
    payload = "|".join(
        [
            str(spec.n_sites),
            spec.boundary,
            float(spec.theta_mean).hex(),
            float(spec.phi_mean).hex(),
            float(spec.theta_halfwidth).hex(),
            float(spec.phi_halfwidth).hex(),
            str(spec.chiral_constraint),
        ]
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class AngleField:
    """One frozen disorder realization: per-site coin angles plus provenance.

    ``vartheta`` is the pre-shift coin angle; it equals ``theta`` when the
    realization was drawn under the chiral constraint.
    """

    theta: np.ndarray
    phi: np.ndarray
    vartheta: np.ndarray
    seed: int
    spec_digest: str


@dataclass(frozen=True)
class EnsemblePlan:
    """Seed bookkeeping for a disorder ensemble."""

    master_seed: int
    n_realizations: int
    start_index: int = 0

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError(f"n_realizations must be >= 1, got {self.n_realizations}")
        if self.start_index < 0:
            raise ValueError(f"start_index must be >= 0, got {self.start_index}")

    def seed_for(self, index: int) -> int:
        return derive_seed(self.master_seed, index)

    def indices(self) -> range:
        return range(self.start_index, self.start_index + self.n_realizations)


def sample_realization(spec: WalkSpec, seed: int) -> AngleField:
    """Draw one realization of i.i.d. uniform angles for ``spec``.

    theta_q is uniform on [theta_mean - halfwidth, theta_mean + halfwidth)
    and likewise for phi_q; the two channels and all sites are independent.
    """
    n = spec.n_sites
    draws = uniform_from_counters(seed, 0, 2 * n)
    theta = spec.theta_mean + spec.theta_halfwidth * (2.0 * draws[0::2] - 1.0)
    phi = spec.phi_mean + spec.phi_halfwidth * (2.0 * draws[1::2] - 1.0)
    if spec.chiral_constraint:
        vartheta = theta.copy()
    else:
        extra = uniform_from_counters(seed, 2 * n, n)
        vartheta = spec.theta_mean + spec.theta_halfwidth * (2.0 * extra - 1.0)
    return AngleField(theta=theta, phi=phi, vartheta=vartheta, seed=int(seed),
                      spec_digest=spec_digest(spec))
