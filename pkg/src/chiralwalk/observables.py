"""Ensemble-averaged distributions, spin polarization and spreading metrics.

Probabilities are resolved in the chiral (sigma_2) basis: channel index 0 is
the +1 eigenstate, channel 1 the -1 eigenstate.  Site coordinates in records
are relative to the initial-state center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .disorder import AngleField, EnsemblePlan, sample_realization
from .lattice import (
    CHIRAL_MINUS,
    CHIRAL_PLUS,
    WalkSpec,
    WalkerState,
    delocalized_state,
    evolve,
    localized_state,
)
from .runner import map_ordered

__all__ = [
    "InitialStateRecipe",
    "DistributionRecord",
    "PolarizationSeries",
    "spin_resolved_probability",
    "accumulate_distribution",
    "polarization_series",
    "staggering_metric",
    "mean_displacement",
    "fit_localization_length",
    "LocalizationFitError",
]


@dataclass(frozen=True)
class InitialStateRecipe:
    """Declarative initial-state choice: localized or even-site plane wave."""

    kind: str                 # 'localized' or 'delocalized'
    q0: int | None = None     # localized: absolute site (default lattice center)
    chirality: int = 1        # localized: sigma_2 eigenvalue
    m_sites: int = 0          # delocalized: number of occupied sites minus one
    momentum: float = 0.0     # delocalized: phase advance per site

    def __post_init__(self):
        if self.kind not in ("localized", "delocalized"):
            raise ValueError(f"unknown initial-state kind {self.kind!r}")

    def center(self, spec: WalkSpec) -> int:
        if self.kind == "localized" and self.q0 is not None:
            return self.q0
        return spec.n_sites // 2

    def build(self, spec: WalkSpec, margin: int = 0) -> WalkerState:
        if self.kind == "localized":
            return localized_state(spec, self.center(spec), self.chirality)
        return delocalized_state(spec, self.m_sites, self.momentum, margin=margin)

    def describe(self) -> dict:
        if self.kind == "localized":
            return {"initial_state": "localized", "q0": self.q0, "chirality": self.chirality}
        return {
            "initial_state": "delocalized",
            "m_sites": self.m_sites,
            "momentum": self.momentum,
        }


@dataclass
class DistributionRecord:
    """Mean spin-resolved probabilities P(t, q, channel) with standard errors.

    ``probs`` and ``stderr`` have shape (n_times, n_sites, 2); ``q`` holds the
    site coordinate relative to the initial-state center for each column.
    """

    times: np.ndarray
    q: np.ndarray
    probs: np.ndarray
    stderr: np.ndarray
    initial_state: dict
    n_realizations: int
    master_seed: int
    extra: dict = field(default_factory=dict)


@dataclass
class PolarizationSeries:
    """Spatially integrated spin polarization against time."""

    times: np.ndarray
    dp: np.ndarray
    stderr: np.ndarray
    staggered: bool
    params: dict = field(default_factory=dict)


def spin_resolved_probability(state: WalkerState) -> np.ndarray:
    """Project each site spinor on the chiral basis, returning P(q, channel).

    Column 0 holds the +1 channel, column 1 the -1 channel; summed over
    channels this is the ordinary site probability.
    """
    amps = state.amplitudes
    plus = amps @ CHIRAL_PLUS.conj()
    minus = amps @ CHIRAL_MINUS.conj()
    return np.stack((np.abs(plus) ** 2, np.abs(minus) ** 2), axis=1)


def _distribution_worker(args) -> np.ndarray:
    spec, recipe, times, seed, margin = args
    angles = sample_realization(spec, seed)
    state = recipe.build(spec, margin=margin)
    snapshots = evolve(state, angles, spec, max(times), record=list(times))
    return np.stack([spin_resolved_probability(snap) for _, snap in snapshots])


def accumulate_distribution(
    plan: EnsemblePlan,
    spec: WalkSpec,
    recipe: InitialStateRecipe,
    times,
    n_workers: int = 1,
    hooks=None,
) -> DistributionRecord:
    """Ensemble mean and standard error of P(t, q, channel).

    Realization i uses the seed derived from (master_seed, i) and results are
    accumulated in realization-index order, which makes the output
    bit-identical for any worker count.  ``hooks``, when given, is consulted
    after every realization with the running (done, sums, sums_sq); experiment
    checkpointing and budgeted partial runs plug in there.
    """
    times = np.asarray(sorted(set(int(t) for t in times)), dtype=int)
    if times.size == 0 or times[0] < 0:
        raise ValueError("times must be a non-empty set of non-negative steps")
    t_max = int(times[-1])
    margin = t_max if spec.boundary == "open" else 0

    # Fails early (before any ensemble work) when the lattice is undersized.
    recipe.build(spec, margin=margin)

    shape = (times.size, spec.n_sites, 2)
    sums = np.zeros(shape)
    sums_sq = np.zeros(shape)
    done = 0
    indices = list(plan.indices())
    if hooks is not None and hooks.completed > 0:
        done = min(hooks.completed, len(indices))
        sums[...] = hooks.sums
        sums_sq[...] = hooks.sums_sq

    tasks = [(spec, recipe, times, plan.seed_for(i), margin) for i in indices[done:]]
    for probs in map_ordered(_distribution_worker, tasks, n_workers):
        sums += probs
        sums_sq += probs * probs
        done += 1
        if hooks is not None:
            hooks.update(done, sums, sums_sq)
            if hooks.should_stop(done):
                break

    n = done
    mean = sums / n
    if n > 1:
        var = np.maximum(sums_sq - n * mean * mean, 0.0) / (n - 1)
        stderr = np.sqrt(var / n)
    else:
        stderr = np.zeros(shape)

    center = recipe.center(spec)
    return DistributionRecord(
        times=times,
        q=np.arange(spec.n_sites) - center,
        probs=mean,
        stderr=stderr,
        initial_state=recipe.describe(),
        n_realizations=n,
        master_seed=plan.master_seed,
    )


def polarization_series(record: DistributionRecord, staggered: bool = False,
                        params: dict | None = None) -> PolarizationSeries:
    """Integrated polarization dP(t) = sum_q [P(t,q,+) - P(t,q,-)].

    Standard errors of the two channels are combined in quadrature over sites;
    channel anticorrelations make this a conservative bound.
    """
    dp = (record.probs[:, :, 0] - record.probs[:, :, 1]).sum(axis=1)
    stderr = np.sqrt((record.stderr ** 2).sum(axis=(1, 2)))
    return PolarizationSeries(
        times=record.times.copy(),
        dp=dp,
        stderr=stderr,
        staggered=staggered,
        params=dict(params or {}),
    )


def staggering_metric(series: PolarizationSeries,
                      window: tuple[int, int] = (5, 40)) -> tuple[np.ndarray, float]:
    """Sign-corrected polarization s(t) = (-1)^t dP(t) and its positivity rate.

    Returns the s(t) array (aligned with series.times) and the fraction of
    window times at which s(t) > 0.
    """
    signs = np.where(series.times % 2 == 0, 1.0, -1.0)
    s = signs * series.dp
    lo, hi = window
    mask = (series.times >= lo) & (series.times <= hi)
    if not mask.any():
        raise ValueError(f"window {window} contains none of the recorded times")
    fraction = float((s[mask] > 0).mean())
    return s, fraction


def mean_displacement(record: DistributionRecord) -> np.ndarray:
    """Mean distance from the initial center, per recorded time."""
    weights = record.probs.sum(axis=2)
    return weights @ np.abs(record.q)


class LocalizationFitError(RuntimeError):
    """Raised when a tail window is too noisy or flat to fit a decay length."""


def fit_localization_length(p_tail: np.ndarray, q_tail: np.ndarray,
                            min_r_squared: float = 0.9) -> tuple[float, float]:
    """Decay length of an exponential tail from least squares on log P.

    Fits ln P against |q| over the supplied window and returns
    (xi, half width of the 95 percent confidence interval).  Windows with
    R^2 below ``min_r_squared`` are rejected.
    """
    q = np.abs(np.asarray(q_tail, dtype=float))
    p = np.asarray(p_tail, dtype=float)
    if q.size != p.size or q.size < 3:
        raise ValueError("need at least three tail points")
    if np.any(p <= 0.0):
        raise ValueError("tail probabilities must be positive")
    y = np.log(p)
    design = np.stack((q, np.ones_like(q)), axis=1)
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    slope, intercept = coef
    fitted = design @ coef
    ss_res = float(((y - fitted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot <= 0.0:
        raise LocalizationFitError("tail is flat; no decay to fit")
    r_squared = 1.0 - ss_res / ss_tot
    if r_squared < min_r_squared:
        raise LocalizationFitError(
            f"tail window too noisy: R^2 = {r_squared:.3f} < {min_r_squared}"
        )
    if slope >= 0.0:
        raise LocalizationFitError("tail does not decay (non-negative slope)")
    dof = q.size - 2
    slope_var = (ss_res / dof) / float(((q - q.mean()) ** 2).sum()) if dof > 0 else 0.0
    slope_err = math.sqrt(slope_var)
    xi = -1.0 / slope
    # First-order error propagation through xi = -1/slope.
    xi_ci = 1.96 * slope_err / slope ** 2
    return float(xi), float(xi_ci)
