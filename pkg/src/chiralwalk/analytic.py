"""Closed forms for the critical walk: scaling profile, frequency-domain
propagator, and the bare topological angle with its phase classification.

The time-domain critical profile is a truncated series
sum_n a**(n+1) * n**2 * exp(-n**2 |q| / xi_t) with a = sigma*sigma' the spin
alignment and xi_t the slow (log-squared) correlation scale.  The raw series
has no absolute normalization; the constant is pinned by the integrated law
P_total(t) = 1/(4 ln^2 t), evaluated on the integer lattice at the same
truncation depth.  The truncation depth is therefore part of the convention
(the untruncated lattice sum diverges at the origin) and is recorded in all
outputs; every documented observable (integrated law, tail slope, channel
ordering) is insensitive to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_SERIES_TERMS",
    "BARE_CONDUCTANCE",
    "CriticalParams",
    "PhaseDiagnostics",
    "correlation_scale",
    "scaling_function",
    "critical_norm_constant",
    "critical_distribution",
    "mode_energy",
    "matrix_element",
    "frequency_propagator",
    "integrated_frequency_probability",
    "topological_angle",
    "classify_phase",
    "phase_diagnostics",
]

DEFAULT_SERIES_TERMS = 24
BARE_CONDUCTANCE = 0.25


@dataclass(frozen=True)
class CriticalParams:
    """Evaluation knobs for the critical-profile series."""

    n_terms: int = DEFAULT_SERIES_TERMS
    alignment: int = 1

    def __post_init__(self):
        if self.n_terms < 1:
            raise ValueError(f"n_terms must be >= 1, got {self.n_terms}")
        if self.alignment not in (1, -1):
            raise ValueError(f"alignment must be +1 or -1, got {self.alignment}")


def correlation_scale(t: float) -> float:
    """Slow correlation scale xi_t = (2/pi^2) * ln(t)**2, for t > 1."""
    if t <= 1.0:
        raise ValueError(f"t must exceed 1, got {t}")
    return (2.0 / math.pi ** 2) * math.log(t) ** 2


def scaling_function(x: float, alignment: int = 1,
                     n_terms: int = DEFAULT_SERIES_TERMS) -> float:
    """Series sum_{n>=1} alignment**(n+1) * n**2 * exp(-n**2 x) for x > 0.

    The truncation tail must be negligible at the evaluation point: the first
    omitted term has to be below 1e-12 of the leading term, otherwise the
    requested depth is insufficient and a ValueError is raised.
    """
    if x <= 0.0:
        raise ValueError(f"x must be positive, got {x}")
    if alignment not in (1, -1):
        raise ValueError(f"alignment must be +1 or -1, got {alignment}")
    n = np.arange(1, n_terms + 1, dtype=float)
    terms = n ** 2 * np.exp(-(n ** 2) * x)
    next_n = float(n_terms + 1)
    tail = next_n ** 2 * math.exp(-(next_n ** 2) * x)
    if tail > 1e-12 * terms[0]:
        raise ValueError(
            f"series truncated too early at {n_terms} terms for x = {x}: "
            f"tail bound {tail:.3e}"
        )
    if alignment == 1:
        return float(terms.sum())
    signs = np.where(n % 2 == 1, 1.0, -1.0)
    return float((signs * terms).sum())


def _raw_profile(t: float, q: float, alignment: int, n_terms: int) -> float:
    """Unnormalized profile value at integer offset q (finite at q = 0)."""
    xi = correlation_scale(t)
    n = np.arange(1, n_terms + 1, dtype=float)
    terms = n ** 2 * np.exp(-(n ** 2) * abs(q) / xi)
    if alignment == 1:
        return float(terms.sum())
    signs = np.where(n % 2 == 1, 1.0, -1.0)
    return float((signs * terms).sum())


def critical_norm_constant(t: float, n_terms: int = DEFAULT_SERIES_TERMS) -> float:
    """Normalization making the four-channel lattice sum equal 1/(4 ln^2 t).

    Summed over integer q, a single mode contributes coth(n^2 / (2 xi_t));
    over the four spin channels only odd modes survive, each with weight 4.
    """
    xi = correlation_scale(t)
    total = 0.0
    for n in range(1, n_terms + 1, 2):
        beta = n * n / xi
        # coth(beta/2) without overflow for large arguments.
        total += 4.0 * n * n * (1.0 / math.tanh(0.5 * beta))
    target = 1.0 / (4.0 * math.log(t) ** 2)
    return target / total


def critical_distribution(t: float, q: float, alignment: int = 1,
                          n_terms: int = DEFAULT_SERIES_TERMS) -> float:
    """Critical-channel probability at time t and integer offset q.

    Normalized so that the sum over all integer q and all four spin channels
    equals 1/(4 ln^2 t) at the same truncation depth.
    """
    if alignment not in (1, -1):
        raise ValueError(f"alignment must be +1 or -1, got {alignment}")
    return critical_norm_constant(t, n_terms) * _raw_profile(t, q, alignment, n_terms)


def mode_energy(n: int, eta: float) -> float:
    """Soft-mode spectrum pi^2 (n+1)^2 / (4 ln^2 eta) at regulator eta."""
    if not 0.0 < eta < 0.1:
        raise ValueError(f"eta must lie in (0, 0.1), got {eta}")
    if n < 0:
        raise ValueError(f"mode index must be >= 0, got {n}")
    return math.pi ** 2 * (n + 1) ** 2 / (4.0 * math.log(eta) ** 2)


def _mode_momentum(n: int, eta: float) -> float:
    return math.pi * (n + 1) / (2.0 * math.log(1.0 / eta))


def matrix_element(n: int, eta: float, alignment: int = 1,
                   full: bool = True) -> float:
    """Transition weight M_n of the frequency-domain propagator.

    The full form carries the factor k^3 cosh(pi k) / sinh(pi k)^3 that cuts
    the series off at k ~ 1; the small-k form replaces it by its limit
    1/pi^3 and is accurate to O(k^4).
    """
    if not 0.0 < eta < 0.1:
        raise ValueError(f"eta must lie in (0, 0.1), got {eta}")
    if alignment not in (1, -1):
        raise ValueError(f"alignment must be +1 or -1, got {alignment}")
    sign = 1.0 if (alignment == 1 or n % 2 == 0) else -1.0
    log_eta = math.log(eta)
    k = _mode_momentum(n, eta)
    dk_dn = math.pi / (2.0 * math.log(1.0 / eta))
    prefactor = (math.pi ** 2 / 2.0) * k ** 2 / (eta ** 2 * log_eta ** 2) * dk_dn
    if full:
        pk = math.pi * k
        if pk > 350.0:
            return 0.0
        shape = k ** 3 * math.cosh(pk) / math.sinh(pk) ** 3
    else:
        shape = k ** 3 / (math.pi * k) ** 3
    return sign * prefactor * shape


def frequency_propagator(eta: float, q: float, alignment: int = 1,
                         full: bool = True,
                         n_terms: int | None = None) -> float:
    """Frequency-domain critical propagator eta * sum_n M_n exp(-2 |q| e_n).

    With full matrix elements the series is summed to its natural cutoff; the
    small-k form diverges term-by-term, so it requires an explicit depth and
    a positive offset q.
    """
    if not 0.0 < eta < 0.1:
        raise ValueError(f"eta must lie in (0, 0.1), got {eta}")
    if q < 0.0:
        raise ValueError(f"q must be >= 0, got {q}")
    if not full:
        if n_terms is None:
            raise ValueError("the small-k form needs an explicit n_terms")
        if q == 0.0:
            raise ValueError("the small-k form diverges at q = 0; use full=True")
    total = 0.0
    peak = 0.0
    n = 0
    while True:
        term = eta * matrix_element(n, eta, alignment, full=full) * math.exp(
            -2.0 * q * mode_energy(n, eta)
        )
        total += term
        peak = max(peak, abs(term))
        n += 1
        if full:
            if _mode_momentum(n, eta) > 2.0 and abs(term) <= 1e-16 * peak:
                break
            if n > 100000:
                raise RuntimeError("frequency propagator series failed to terminate")
        elif n >= n_terms:
            break
    return total


def integrated_frequency_probability(eta: float) -> float:
    """Four-channel, whole-line integral of the frequency-domain propagator.

    Odd modes cancel between channels; each even mode contributes
    4 * eta * M_n / e_n.  The full matrix elements make the series converge.
    """
    if not 0.0 < eta < 0.1:
        raise ValueError(f"eta must lie in (0, 0.1), got {eta}")
    total = 0.0
    n = 0
    while True:
        if n % 2 == 0:
            term = 4.0 * eta * matrix_element(n, eta, 1, full=True) / mode_energy(n, eta)
            total += term
            if _mode_momentum(n, eta) > 2.0 and term < 1e-14 * total:
                break
        n += 1
        if n > 100000:
            raise RuntimeError("integrated probability series failed to terminate")
    return total


def topological_angle(theta_mean: float, phi_mean: float,
                      theta_halfwidth: float, phi_halfwidth: float,
                      quasi_energy: float = 0.0) -> complex:
    """Bare topological angle 0.5 * (1 - e^{i eps} <sin(theta) cos(phi)>).

    For uniform draws the disorder average factorizes into
    sin(mean) * cos(mean) * sinc(halfwidth) per channel, with sinc(0) = 1.
    ``quasi_energy`` is 0 or pi, selecting which symmetric point is probed.
    """
    if quasi_energy not in (0.0, math.pi):
        raise ValueError(f"quasi_energy must be 0 or pi, got {quasi_energy}")

    def sinc(x: float) -> float:
        return 1.0 if x == 0.0 else math.sin(x) / x

    average = (
        math.sin(theta_mean) * math.cos(phi_mean)
        * sinc(theta_halfwidth) * sinc(phi_halfwidth)
    )
    phase = 1.0 if quasi_energy == 0.0 else -1.0
    return 0.5 * (1.0 - phase * average) + 0.0j


def classify_phase(chi0: float, tol: float = 1e-9) -> str:
    """Phase label from the bare angle: critical at 1/2, else nearest integer."""
    if abs(chi0 - 0.5) < tol:
        return "critical"
    return "topological_1" if round(chi0) >= 1 else "topological_0"


@dataclass(frozen=True)
class PhaseDiagnostics:
    """Bare angles at both symmetric points and the resulting phase label."""

    chi0: complex
    chi_pi: complex
    label: str
    bare_conductance: float = BARE_CONDUCTANCE


def phase_diagnostics(theta_mean: float, phi_mean: float,
                      theta_halfwidth: float, phi_halfwidth: float) -> PhaseDiagnostics:
    """Evaluate both bare angles and classify the resulting phase."""
    chi0 = topological_angle(theta_mean, phi_mean, theta_halfwidth, phi_halfwidth, 0.0)
    chi_pi = topological_angle(theta_mean, phi_mean, theta_halfwidth, phi_halfwidth, math.pi)
    return PhaseDiagnostics(chi0=chi0, chi_pi=chi_pi, label=classify_phase(chi0.real))
