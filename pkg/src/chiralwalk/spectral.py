"""Dense Floquet spectral analysis: eigenphases, DoS, resolvents, symmetries.

Eigensystems come from the complex Schur decomposition.  A unitary matrix is
normal, so its Schur form is diagonal up to rounding and the Schur vectors
are an orthonormal eigenbasis; residuals are checked against the contract in
``eigendecompose``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .disorder import EnsemblePlan, sample_realization
from .lattice import (
    WalkSpec,
    WalkerState,
    chiral_operator,
    chiral_sublattice_operator,
    floquet_matrix,
    sublattice_operator,
)
from .runner import map_ordered

__all__ = [
    "SpectrumRecord",
    "DosHistogram",
    "eigendecompose",
    "clean_dispersion",
    "clean_spectrum",
    "dos_histogram",
    "resolvent",
    "symmetry_report",
    "spectral_weights",
    "wrap_phase",
    "eigenphase_multiset_distance",
]

UNITARITY_TOL = 1e-10
RESIDUAL_TOL = 1e-9
DEGENERACY_TOL = 1e-9


def wrap_phase(x):
    """Map angles to the principal interval (-pi, pi]."""
    return np.angle(np.exp(1j * np.asarray(x, dtype=float)))


def eigenphase_multiset_distance(phases: np.ndarray, reference: np.ndarray) -> float:
    """Largest angular mismatch between two eigenphase multisets.

    Plain sorted comparison mispairs values that sit exactly on the -pi/pi
    seam, so both multisets are re-cut in the middle of the reference's widest
    angular gap before sorting.
    """
    ref = np.sort(wrap_phase(reference))
    values = np.asarray(phases, dtype=float)
    if values.size != ref.size:
        raise ValueError("multisets must have equal size")
    gaps = np.diff(np.concatenate((ref, ref[:1] + 2.0 * math.pi)))
    widest = int(np.argmax(gaps))
    cut = ref[widest] + 0.5 * gaps[widest]
    a = np.sort(wrap_phase(values - cut))
    b = np.sort(wrap_phase(ref - cut))
    return float(np.abs(a - b).max())


@dataclass
class SpectrumRecord:
    """Full eigensystem of one Floquet matrix realization.

    ``eigenphases`` are sorted ascending in (-pi, pi]; column n of
    ``eigenvectors`` belongs to eigenphase n.
    """

    eigenphases: np.ndarray
    eigenvectors: np.ndarray
    seed: int | None = None


@dataclass
class DosHistogram:
    """Ensemble-averaged density of eigenphases over (-pi, pi]."""

    bin_edges: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    n_realizations: int

    @property
    def bin_centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    def peak_density(self, energy: float) -> float:
        """Largest density among bins within one width of ``energy`` (circular)."""
        centers = self.bin_centers
        dist = np.abs(wrap_phase(centers - energy))
        nearby = dist <= self.bin_width + 1e-12
        return float(self.density[nearby].max())


def _tie_break_key(column: np.ndarray) -> float:
    """Phase of the first component with non-negligible modulus."""
    idx = np.flatnonzero(np.abs(column) > 1e-8)
    if idx.size == 0:
        return 0.0
    return float(np.angle(column[idx[0]]))


def eigendecompose(u: np.ndarray, seed: int | None = None) -> SpectrumRecord:
    """Eigenphases and an orthonormal eigenbasis of a unitary matrix.

    Raises if ``u`` is not unitary to 1e-10, or if the decomposition fails
    its residual contract (reported with a condition diagnostic).
    """
    u = np.asarray(u, dtype=complex)
    n = u.shape[0]
    unitarity = np.abs(u.conj().T @ u - np.eye(n)).max()
    if unitarity > UNITARITY_TOL:
        raise ValueError(f"matrix is not unitary: max |U^H U - 1| = {unitarity:.3e}")

    t, vectors = scipy.linalg.schur(u, output="complex")
    phases = np.angle(np.diag(t))

    order = np.argsort(phases, kind="stable")
    phases = phases[order]
    vectors = vectors[:, order]

    # Deterministic ordering inside near-degenerate clusters.
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and phases[stop] - phases[start] < DEGENERACY_TOL:
            stop += 1
        if stop - start > 1:
            keys = [_tie_break_key(vectors[:, j]) for j in range(start, stop)]
            sub = np.argsort(keys, kind="stable")
            phases[start:stop] = phases[start:stop][sub]
            vectors[:, start:stop] = vectors[:, start:stop][:, sub]
        start = stop

    residual = np.abs(u @ vectors - vectors * np.exp(1j * phases)[None, :]).max()
    if residual > RESIDUAL_TOL:
        cond = np.linalg.cond(u)
        raise RuntimeError(
            f"eigendecomposition residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e} "
            f"(condition number {cond:.3e})"
        )
    return SpectrumRecord(eigenphases=phases, eigenvectors=vectors, seed=seed)


def clean_dispersion(theta: float, phi: float, p: float) -> tuple[float, float]:
    """Quasi-energy band pair (+eps, -eps) of the uniform-angle walk.

    eps in [0, pi] solves
    cos(eps) = cos(phi + p) * cos(theta/2)**2 - cos(phi - p) * sin(theta/2)**2.
    """
    if not -math.pi < p <= math.pi:
        raise ValueError(f"momentum must lie in (-pi, pi], got {p}")
    c = (
        math.cos(phi + p) * math.cos(0.5 * theta) ** 2
        - math.cos(phi - p) * math.sin(0.5 * theta) ** 2
    )
    if abs(c) > 1.0 + 1e-12:
        raise ValueError(f"dispersion cosine {c} out of range")
    eps = math.acos(min(1.0, max(-1.0, c)))
    return eps, -eps


def clean_spectrum(theta: float, phi: float, n_sites: int) -> np.ndarray:
    """Sorted eigenphase multiset of the clean periodic walk.

    Samples both dispersion branches at the lattice momenta p = 2*pi*m/N and
    wraps into (-pi, pi]; this is the oracle the dense matrix must reproduce.
    """
    momenta = wrap_phase(2.0 * math.pi * np.arange(n_sites) / n_sites)
    phases = []
    for p in momenta:
        plus, minus = clean_dispersion(theta, phi, float(p))
        phases.extend((plus, minus))
    return np.sort(wrap_phase(np.asarray(phases)))


def _dos_worker(args) -> np.ndarray:
    spec, seed, edges = args
    u = floquet_matrix(sample_realization(spec, seed), spec)
    phases = eigendecompose(u, seed=seed).eigenphases
    counts, _ = np.histogram(phases, bins=edges)
    width = edges[1] - edges[0]
    return counts.astype(float) / (phases.size * width)


def dos_histogram(spec: WalkSpec, n_bins: int, plan: EnsemblePlan,
                  n_workers: int = 1) -> DosHistogram:
    """Disorder-averaged eigenphase density over (-pi, pi].

    Each realization contributes a unit-integral histogram; the record holds
    the mean density per bin and the standard error across realizations.
    """
    if spec.boundary != "periodic":
        raise ValueError("density of states needs periodic boundaries")
    if spec.n_sites % 2:
        raise ValueError("density of states needs an even number of sites")
    edges = np.linspace(-math.pi, math.pi, n_bins + 1)
    tasks = [(spec, plan.seed_for(i), edges) for i in plan.indices()]
    total = np.zeros(n_bins)
    total_sq = np.zeros(n_bins)
    for density in map_ordered(_dos_worker, tasks, n_workers):
        total += density
        total_sq += density * density
    n = plan.n_realizations
    mean = total / n
    if n > 1:
        var = np.maximum(total_sq - n * mean * mean, 0.0) / (n - 1)
        stderr = np.sqrt(var / n)
    else:
        stderr = np.zeros(n_bins)
    return DosHistogram(bin_edges=edges, density=mean, stderr=stderr, n_realizations=n)


def resolvent(u: np.ndarray, quasi_energy: float, kind: str = "retarded",
              regulator: float = 1e-6) -> np.ndarray:
    """Retarded or advanced propagator of the Floquet matrix at one energy.

    The retarded kernel is [1 - exp(i*eps - regulator) U]^-1; the advanced one
    is its Hermitian conjugate.  The regulator is the finite stand-in for the
    infinitesimal damping and must stay positive.
    """
    if kind not in ("retarded", "advanced"):
        raise ValueError(f"kind must be 'retarded' or 'advanced', got {kind!r}")
    if regulator < 0.0:
        raise ValueError("regulator must be >= 0")
    u = np.asarray(u, dtype=complex)
    n = u.shape[0]
    system = np.eye(n) - np.exp(1j * quasi_energy - regulator) * u
    try:
        g_ret = scipy.linalg.solve(system, np.eye(n, dtype=complex))
    except scipy.linalg.LinAlgError as err:
        raise RuntimeError(
            f"singular resolvent at quasi-energy {quasi_energy} with "
            f"regulator {regulator}: {err}"
        ) from err
    return g_ret if kind == "retarded" else g_ret.conj().T


def symmetry_report(u: np.ndarray) -> dict[str, float]:
    """Max elementwise deviation from the three protecting identities.

    Keys: 'chiral' for s2 U s2 = U^dagger, 'sublattice' for S U S = -U, and
    'chiral_sublattice' for C (iU) C = (iU)^dagger.  Needs an even number of
    sites (the sublattice sign is ill-defined on an odd ring).
    """
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    if dim % 4:
        raise ValueError("sublattice checks need an even number of sites")
    n_sites = dim // 2
    c0 = chiral_operator(n_sites)
    s = sublattice_operator(n_sites)
    csl = chiral_sublattice_operator(n_sites)
    iu = 1j * u
    return {
        "chiral": float(np.abs(c0 @ u @ c0 - u.conj().T).max()),
        "sublattice": float(np.abs(s @ u @ s + u).max()),
        "chiral_sublattice": float(np.abs(csl @ iu @ csl - iu.conj().T).max()),
    }


def spectral_weights(state: WalkerState, spectrum: SpectrumRecord) -> np.ndarray:
    """Overlap weights |<eigenvector_n | state>|^2 for each eigenphase."""
    psi = state.as_vector()
    if psi.size != spectrum.eigenvectors.shape[0]:
        raise ValueError("state and spectrum dimensions do not match")
    overlaps = spectrum.eigenvectors.conj().T @ psi
    return np.abs(overlaps) ** 2
