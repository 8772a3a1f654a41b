"""Walker state and single-step Floquet evolution for the 1d chiral walk.

The walker lives on a chain of ``n_sites`` sites with a two-level internal
("spin") degree of freedom.  One time step applies, in order, a z-rotation by
half the local phase angle, an x-rotation by half the local pre-shift coin
angle, the spin-dependent shift (up moves right, down moves left), an
x-rotation by half the local post-shift coin angle, and a final half z-rotation.
All rotations are site-diagonal and act with the angle of the site an amplitude
currently occupies, so the post-shift rotations see the destination site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SIGMA_1",
    "SIGMA_2",
    "SIGMA_3",
    "CHIRAL_PLUS",
    "CHIRAL_MINUS",
    "WalkSpec",
    "WalkerState",
    "StepKernel",
    "localized_state",
    "delocalized_state",
    "apply_step",
    "evolve",
    "floquet_matrix",
    "chiral_operator",
    "sublattice_operator",
    "chiral_sublattice_operator",
]

# Pauli matrices in the {up, down} basis.
SIGMA_1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# Chiral (sigma_2) eigenvectors.  The phase convention is fixed once and for
# all here; the sign of the spin polarization depends on it.
CHIRAL_PLUS = np.array([1.0, 1.0j], dtype=complex) / math.sqrt(2.0)   # eigenvalue +1
CHIRAL_MINUS = np.array([1.0, -1.0j], dtype=complex) / math.sqrt(2.0)  # eigenvalue -1

# Amplitude allowed to sit on an open-boundary edge before a shift.
EDGE_TOLERANCE = 1e-14


@dataclass(frozen=True)
class WalkSpec:
    """Static description of a walk: lattice, mean angles, disorder widths.

    ``chiral_constraint`` ties the pre-shift coin angle to the post-shift one,
    which is what makes one step obey the chiral identity; every critical-walk
    experiment keeps it on.
    """

    n_sites: int
    boundary: str = "periodic"
    theta_mean: float = 0.0
    phi_mean: float = 0.0
    theta_halfwidth: float = 0.0
    phi_halfwidth: float = 0.0
    chiral_constraint: bool = True

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError(f"n_sites must be >= 2, got {self.n_sites}")
        if self.boundary not in ("periodic", "open"):
            raise ValueError(f"boundary must be 'periodic' or 'open', got {self.boundary!r}")
        for name in ("theta_halfwidth", "phi_halfwidth"):
            value = getattr(self, name)
            if not 0.0 <= value <= math.pi:
                raise ValueError(f"{name} must lie in [0, pi], got {value}")
        for name in ("theta_mean", "phi_mean"):
            value = getattr(self, name)
            if not -math.pi < value <= math.pi:
                raise ValueError(f"{name} must lie in (-pi, pi], got {value}")

    @property
    def dim(self) -> int:
        """Hilbert-space dimension (two spin amplitudes per site)."""
        return 2 * self.n_sites


@dataclass
class WalkerState:
    """Complex amplitude field over (site, spin), stored as an (N, 2) array.

    Spin pairs are adjacent in memory (site-major layout); the step is a
    streaming pass over this array.
    """

    amplitudes: np.ndarray
    n_sites: int = field(default=0)

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=complex)
        if self.amplitudes.ndim != 2 or self.amplitudes.shape[1] != 2:
            raise ValueError(f"amplitudes must have shape (n_sites, 2), got {self.amplitudes.shape}")
        if self.n_sites == 0:
            self.n_sites = self.amplitudes.shape[0]
        elif self.n_sites != self.amplitudes.shape[0]:
            raise ValueError("n_sites does not match amplitude array")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "WalkerState":
        return WalkerState(self.amplitudes.copy(), self.n_sites)

    def probabilities(self) -> np.ndarray:
        """Per-site probability |psi_up|^2 + |psi_down|^2."""
        return np.abs(self.amplitudes[:, 0]) ** 2 + np.abs(self.amplitudes[:, 1]) ** 2

    def as_vector(self) -> np.ndarray:
        """Flatten to a length 2*n_sites vector, index = 2*q + spin."""
        return self.amplitudes.reshape(-1)

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "WalkerState":
        vector = np.asarray(vector, dtype=complex)
        if vector.ndim != 1 or vector.size % 2:
            raise ValueError("vector length must be even")
        return cls(vector.reshape(-1, 2))


def localized_state(spec: WalkSpec, q0: int, chirality: int) -> WalkerState:
    """Walker concentrated at site ``q0`` in a chiral eigenstate.

    ``chirality`` is the sigma_2 eigenvalue, +1 or -1.
    """
    if not 0 <= q0 < spec.n_sites:
        raise ValueError(f"q0 must lie in [0, {spec.n_sites}), got {q0}")
    if chirality not in (1, -1):
        raise ValueError(f"chirality must be +1 or -1, got {chirality}")
    amps = np.zeros((spec.n_sites, 2), dtype=complex)
    amps[q0] = CHIRAL_PLUS if chirality == 1 else CHIRAL_MINUS
    return WalkerState(amps)


def delocalized_state(spec: WalkSpec, m_sites: int, momentum: float,
                      margin: int = 0) -> WalkerState:
    """Plane-wave-like preparation over ``m_sites + 1`` even sites.

    Occupies sites ``center + 2k`` for ``|k| <= m_sites/2`` with amplitude
    ``(m_sites+1)**-0.5 * exp(i*momentum*site_offset)`` and the +1 chiral
    spinor everywhere.  ``m_sites`` must be even; ``m_sites = 0`` reduces to a
    localized chiral-plus state at the center.  ``margin`` extra free sites are
    required on both flanks (use the number of planned steps).
    """
    if m_sites < 0 or m_sites % 2:
        raise ValueError(f"m_sites must be an even non-negative integer, got {m_sites}")
    half = m_sites // 2
    center = spec.n_sites // 2
    lo = center - 2 * half
    hi = center + 2 * half
    if lo - margin < 0 or hi + margin >= spec.n_sites:
        raise ValueError(
            f"lattice with {spec.n_sites} sites too small for m_sites={m_sites} "
            f"with margin {margin}"
        )
    amps = np.zeros((spec.n_sites, 2), dtype=complex)
    offsets = 2 * np.arange(-half, half + 1)
    phases = np.exp(1j * momentum * offsets) / math.sqrt(m_sites + 1)
    amps[center + offsets, 0] = phases * CHIRAL_PLUS[0]
    amps[center + offsets, 1] = phases * CHIRAL_PLUS[1]
    return WalkerState(amps)


class StepKernel:
    """Precomputed one-step evolution for a fixed disorder realization.

    Building the kernel once and applying it many times avoids recomputing
    the per-site trigonometry inside evolution loops.
    """

    def __init__(self, angles, spec: WalkSpec):
        theta = np.asarray(angles.theta, dtype=float)
        vartheta = np.asarray(angles.vartheta, dtype=float)
        phi = np.asarray(angles.phi, dtype=float)
        if not (theta.shape == vartheta.shape == phi.shape == (spec.n_sites,)):
            raise ValueError("angle arrays must have length n_sites")
        self.n_sites = spec.n_sites
        self.periodic = spec.boundary == "periodic"
        self._ez = np.exp(0.5j * phi)
        self._c_pre = np.cos(0.5 * vartheta)
        self._s_pre = np.sin(0.5 * vartheta)
        self._c_post = np.cos(0.5 * theta)
        self._s_post = np.sin(0.5 * theta)

    def apply(self, amps: np.ndarray, check_edges: bool = True) -> np.ndarray:
        """Advance amplitudes by one step.

        ``amps`` has shape (N, 2) or (N, 2, batch).  For an open boundary the
        components that would fall off the chain must be below EDGE_TOLERANCE,
        otherwise the lattice is undersized and a ValueError is raised.
        """
        squeeze = amps.ndim == 2
        work = amps[:, :, None] if squeeze else amps
        ez = self._ez[:, None]

        up = ez * work[:, 0]
        dn = np.conj(ez) * work[:, 1]

        c, s = self._c_pre[:, None], self._s_pre[:, None]
        up, dn = c * up + 1j * s * dn, 1j * s * up + c * dn

        if self.periodic:
            up = np.roll(up, 1, axis=0)
            dn = np.roll(dn, -1, axis=0)
        else:
            if check_edges:
                leak = max(np.abs(up[-1]).max(initial=0.0), np.abs(dn[0]).max(initial=0.0))
                if leak > EDGE_TOLERANCE:
                    raise ValueError(
                        f"open-boundary amplitude {leak:.3e} at a chain edge before the "
                        "shift; the lattice is undersized for this run"
                    )
            up_shift = np.zeros_like(up)
            dn_shift = np.zeros_like(dn)
            up_shift[1:] = up[:-1]
            dn_shift[:-1] = dn[1:]
            up, dn = up_shift, dn_shift

        c, s = self._c_post[:, None], self._s_post[:, None]
        up, dn = c * up + 1j * s * dn, 1j * s * up + c * dn

        up = ez * up
        dn = np.conj(ez) * dn

        out = np.stack((up, dn), axis=1)
        return out[:, :, 0] if squeeze else out


def apply_step(state: WalkerState, angles, spec: WalkSpec) -> WalkerState:
    """Apply one Floquet step to ``state`` under one disorder realization."""
    kernel = StepKernel(angles, spec)
    return WalkerState(kernel.apply(state.amplitudes), state.n_sites)


def evolve(state: WalkerState, angles, spec: WalkSpec, t_max: int,
           record: list[int] | None = None) -> list[tuple[int, WalkerState]]:
    """Iterate the step ``t_max`` times, returning snapshots at chosen times.

    ``record`` lists the observation times (default: every step including
    t = 0).  The snapshot at t = 0 is a copy of the input.
    """
    if t_max < 0:
        raise ValueError(f"t_max must be >= 0, got {t_max}")
    times = sorted(set(range(t_max + 1) if record is None else record))
    if times and (times[0] < 0 or times[-1] > t_max):
        raise ValueError("record times must lie in [0, t_max]")
    wanted = set(times)
    kernel = StepKernel(angles, spec)
    snapshots = []
    amps = state.amplitudes.copy()
    if 0 in wanted:
        snapshots.append((0, WalkerState(amps.copy(), state.n_sites)))
    for t in range(1, t_max + 1):
        amps = kernel.apply(amps)
        if t in wanted:
            snapshots.append((t, WalkerState(amps.copy(), state.n_sites)))
    return snapshots


def floquet_matrix(angles, spec: WalkSpec) -> np.ndarray:
    """Materialize the one-step evolution as a dense (2N, 2N) matrix.

    Column 2*q + s is the image of the basis state at site q with spin s.
    Periodic boundaries give a unitary matrix; open boundaries truncate the
    two components that leave the chain (no error is raised here).
    """
    n = spec.n_sites
    kernel = StepKernel(angles, spec)
    basis = np.eye(2 * n, dtype=complex).reshape(n, 2, 2 * n)
    image = kernel.apply(basis, check_edges=False)
    return image.reshape(2 * n, 2 * n)


def chiral_operator(n_sites: int) -> np.ndarray:
    """sigma_2 acting on every site, as a dense (2N, 2N) matrix."""
    return np.kron(np.eye(n_sites), SIGMA_2)


def sublattice_operator(n_sites: int) -> np.ndarray:
    """Diagonal (-1)^q operator; requires an even ring to be single-valued."""
    if n_sites % 2:
        raise ValueError("sublattice operator needs an even number of sites")
    signs = np.where(np.arange(n_sites) % 2 == 0, 1.0, -1.0)
    return np.kron(np.diag(signs), np.eye(2))


def chiral_sublattice_operator(n_sites: int) -> np.ndarray:
    """Product of the per-site sigma_2 and the (-1)^q sublattice sign."""
    if n_sites % 2:
        raise ValueError("chiral-sublattice operator needs an even number of sites")
    signs = np.where(np.arange(n_sites) % 2 == 0, 1.0, -1.0)
    return np.kron(np.diag(signs), SIGMA_2)
