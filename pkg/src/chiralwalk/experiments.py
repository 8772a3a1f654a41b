"""Named, reproducible experiment recipes with checkpointed ensemble runs.

A recipe resolves to a fully explicit configuration (lattice size included),
whose content hash is embedded in every output file.  Ensemble accumulation
is checkpointable and bit-reproducible for any worker count.
"""

from __future__ import annotations

import hashlib
import math
import os
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import correlation_scale, critical_distribution
from .disorder import EnsemblePlan
from .lattice import WalkSpec
from .observables import (
    DistributionRecord,
    InitialStateRecipe,
    PolarizationSeries,
    accumulate_distribution,
    mean_displacement,
    polarization_series,
    staggering_metric,
)
from .runner import resolve_workers
from .spectral import DosHistogram, dos_histogram
from .tableio import read_table, write_table

__all__ = [
    "RECIPES",
    "DEFAULT_MASTER_SEED",
    "ExperimentConfig",
    "ConfigError",
    "Checkpoint",
    "RecipeCheck",
    "build_config",
    "parse_config",
    "config_hash",
    "auto_lattice_size",
    "run_polarization_experiment",
    "run_dos_experiment",
    "run_sinai_experiment",
    "run_comparison",
    "contrast_ratio",
    "PolarizationResult",
    "DosResult",
    "SpreadResult",
]

DEFAULT_MASTER_SEED = 123456789

_PI = math.pi

# recipe name -> preset overrides on top of per-kind defaults
RECIPES: dict[str, dict] = {
    "fig4_critical": {
        "kind": "polarization", "theta_mean": 0.0, "phi_mean": 0.0, "momentum": 0.0,
    },
    "fig4_noncritical": {
        "kind": "polarization", "theta_mean": _PI / 2, "phi_mean": 0.0, "momentum": 0.0,
    },
    "fig5_critical": {
        "kind": "polarization", "theta_mean": 0.0, "phi_mean": 0.0,
        "momentum": _PI / 2, "staggered": True,
    },
    "fig5_noncritical": {
        "kind": "polarization", "theta_mean": _PI / 2, "phi_mean": 0.0,
        "momentum": _PI / 2, "staggered": True,
    },
    # Robustness variant: only the phase angle fluctuates.
    "fig4_critical_phionly": {
        "kind": "polarization", "theta_mean": 0.0, "phi_mean": 0.0, "momentum": 0.0,
        "theta_halfwidth": 0.0,
    },
    "dos": {
        "kind": "dos", "theta_mean": 0.0, "phi_mean": 0.0,
        "theta_halfwidth": _PI / 4, "phi_halfwidth": _PI / 4,
        "boundary": "periodic", "n_sites": 200, "realizations": 200,
    },
    "sinai": {
        "kind": "spread", "theta_mean": 0.0, "phi_mean": 0.0,
        "theta_halfwidth": _PI, "phi_halfwidth": _PI,
        "boundary": "periodic", "t_max": 1024, "realizations": 2000,
        "initial_kind": "localized", "window_lo": 16, "window_hi": 1024,
    },
}

_KIND_DEFAULTS = {
    "polarization": {
        "boundary": "open",
        "initial_kind": "delocalized",
        "m_sites": 100,
        "t_max": 40,
        "realizations": 500,
        "theta_halfwidth": _PI / 8,
        "phi_halfwidth": _PI / 8,
        "window_lo": 5,
        "window_hi": 40,
    },
    "dos": {
        "initial_kind": "localized",
        "t_max": 0,
        "realizations": 200,
        "peak_factor": 3.0,
    },
    "spread": {
        "initial_kind": "localized",
        "corr_min": 0.95,
    },
}

_PAPER_SCALE = {
    "polarization": {"realizations": 5000},
    "dos": {"n_sites": 400, "realizations": 1000},
    "spread": {},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description.

    All fields are concrete (the lattice size is resolved at build time), so
    the content hash embedded in outputs pins the run completely together
    with the code version.
    """

    recipe: str
    kind: str
    boundary: str
    n_sites: int
    theta_mean: float
    phi_mean: float
    theta_halfwidth: float
    phi_halfwidth: float
    chiral_constraint: bool
    initial_kind: str
    m_sites: int
    momentum: float
    q0: int
    chirality: int
    t_max: int
    master_seed: int
    realizations: int
    n_bins: int
    checkpoint_interval: int
    staggered: bool
    window_lo: int
    window_hi: int
    contrast_factor: float
    peak_factor: float
    corr_min: float

    def walk_spec(self) -> WalkSpec:
        return WalkSpec(
            n_sites=self.n_sites,
            boundary=self.boundary,
            theta_mean=self.theta_mean,
            phi_mean=self.phi_mean,
            theta_halfwidth=self.theta_halfwidth,
            phi_halfwidth=self.phi_halfwidth,
            chiral_constraint=self.chiral_constraint,
        )

    def plan(self) -> EnsemblePlan:
        return EnsemblePlan(master_seed=self.master_seed, n_realizations=self.realizations)

    def initial_recipe(self) -> InitialStateRecipe:
        if self.initial_kind == "localized":
            q0 = self.q0 if self.q0 >= 0 else self.n_sites // 2
            return InitialStateRecipe(kind="localized", q0=q0, chirality=self.chirality)
        return InitialStateRecipe(kind="delocalized", m_sites=self.m_sites,
                                  momentum=self.momentum)

    def observation_times(self) -> list[int]:
        if self.kind == "spread":
            times = [0]
            t = 1
            while t <= self.t_max:
                times.append(t)
                t *= 2
            return times
        return list(range(self.t_max + 1))

    def as_dict(self) -> dict:
        out = {}
        for spec_field in fields(self):
            value = getattr(self, spec_field.name)
            if isinstance(value, bool):
                out[spec_field.name] = "true" if value else "false"
            elif isinstance(value, float):
                out[spec_field.name] = f"{value:.17g}"
            else:
                out[spec_field.name] = str(value)
        return out


def auto_lattice_size(initial_kind: str, m_sites: int, t_max: int, boundary: str) -> int:
    """Smallest comfortable lattice: full initial extent plus the light cone.

    The delocalized preparation spans 2*m_sites + 1 sites, growing by one site
    per step on each flank; eight spare sites keep the open-boundary edge
    check quiet.  The result is rounded up to an even count so sublattice
    checks stay available.
    """
    extent = 2 * m_sites if initial_kind == "delocalized" else 0
    size = extent + 2 * t_max + 10
    if boundary == "periodic":
        size = max(size, 2 * t_max + 16)
    return size + (size % 2)


_CONFIG_TYPES = {
    "recipe": str,
    "boundary": str,
    "n_sites": int,
    "theta_mean": float,
    "phi_mean": float,
    "theta_halfwidth": float,
    "phi_halfwidth": float,
    "chiral_constraint": bool,
    "initial_kind": str,
    "m_sites": int,
    "momentum": float,
    "q0": int,
    "chirality": int,
    "t_max": int,
    "master_seed": int,
    "realizations": int,
    "n_bins": int,
    "checkpoint_interval": int,
    "staggered": bool,
    "window_lo": int,
    "window_hi": int,
    "contrast_factor": float,
    "peak_factor": float,
    "corr_min": float,
}


class ConfigError(ValueError):
    """Invalid or unknown configuration input."""


def _coerce(key: str, value) -> object:
    target = _CONFIG_TYPES[key]
    if isinstance(value, str):
        text = value.strip()
        try:
            if target is bool:
                if text.lower() in ("true", "1", "yes", "on"):
                    return True
                if text.lower() in ("false", "0", "no", "off"):
                    return False
                raise ValueError(text)
            return target(text)
        except ValueError as err:
            raise ConfigError(f"bad value for key '{key}': {value!r}") from err
    if target is bool:
        return bool(value)
    return target(value)


def build_config(recipe: str, paper_scale: bool = False, **overrides) -> ExperimentConfig:
    """Resolve a named recipe plus overrides into a validated configuration."""
    if recipe not in RECIPES:
        raise ConfigError(
            f"unknown recipe '{recipe}'; available: {', '.join(sorted(RECIPES))}"
        )
    preset = dict(RECIPES[recipe])
    kind = preset.pop("kind")
    values: dict = {
        "recipe": recipe,
        "boundary": "open",
        "n_sites": 0,
        "theta_mean": 0.0,
        "phi_mean": 0.0,
        "theta_halfwidth": 0.0,
        "phi_halfwidth": 0.0,
        "chiral_constraint": True,
        "initial_kind": "localized",
        "m_sites": 0,
        "momentum": 0.0,
        "q0": -1,
        "chirality": 1,
        "t_max": 0,
        "master_seed": DEFAULT_MASTER_SEED,
        "realizations": 1,
        "n_bins": 256,
        "checkpoint_interval": 0,
        "staggered": False,
        "window_lo": 5,
        "window_hi": 40,
        "contrast_factor": 5.0,
        "peak_factor": 3.0,
        "corr_min": 0.95,
    }
    values.update(_KIND_DEFAULTS[kind])
    values.update(preset)
    if paper_scale:
        values.update(_PAPER_SCALE[kind])
    for key, value in overrides.items():
        if key == "recipe":
            continue
        if key not in _CONFIG_TYPES:
            raise ConfigError(f"unknown configuration key '{key}'")
        values[key] = _coerce(key, value)

    if values["n_sites"] <= 0:
        values["n_sites"] = auto_lattice_size(
            values["initial_kind"], values["m_sites"], values["t_max"], values["boundary"]
        )

    config = ExperimentConfig(kind=kind, **values)
    _validate(config)
    return config


def _validate(config: ExperimentConfig) -> None:
    for key in ("theta_halfwidth", "phi_halfwidth"):
        value = getattr(config, key)
        if not 0.0 <= value <= _PI:
            raise ConfigError(f"key '{key}' out of range [0, pi]: {value}")
    for key in ("theta_mean", "phi_mean"):
        value = getattr(config, key)
        if not -_PI < value <= _PI:
            raise ConfigError(f"key '{key}' out of range (-pi, pi]: {value}")
    if config.boundary not in ("periodic", "open"):
        raise ConfigError(f"key 'boundary' must be periodic or open: {config.boundary!r}")
    if config.initial_kind not in ("localized", "delocalized"):
        raise ConfigError(f"key 'initial_kind' must be localized or delocalized")
    if config.m_sites < 0 or config.m_sites % 2:
        raise ConfigError(f"key 'm_sites' must be an even non-negative integer: {config.m_sites}")
    if config.t_max < 0:
        raise ConfigError(f"key 't_max' must be >= 0: {config.t_max}")
    if config.realizations < 1:
        raise ConfigError(f"key 'realizations' must be >= 1: {config.realizations}")
    if config.n_bins < 2:
        raise ConfigError(f"key 'n_bins' must be >= 2: {config.n_bins}")
    if config.chirality not in (1, -1):
        raise ConfigError(f"key 'chirality' must be +1 or -1: {config.chirality}")
    if config.boundary == "open":
        floor = config.m_sites + 2 * config.t_max + 8
        if config.n_sites < floor:
            raise ConfigError(
                f"key 'n_sites' too small for open boundary: {config.n_sites} < {floor}"
            )
    if config.kind == "dos" and config.n_sites % 2:
        raise ConfigError("key 'n_sites' must be even for density-of-states runs")


def config_hash(config: ExperimentConfig) -> str:
    """Content hash of the resolved configuration (first 16 hex chars)."""
    payload = "\n".join(f"{k}={v}" for k, v in sorted(config.as_dict().items()))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def parse_config(path, overrides: dict | None = None,
                 paper_scale: bool = False) -> ExperimentConfig:
    """Load a 'key = value' configuration file and resolve it to a config.

    Lines starting with '#' and blank lines are ignored, so a written
    manifest parses back to the exact configuration it echoes.  Unknown keys
    are rejected by name; ``overrides`` are applied on top of the file.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="ascii").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key != "recipe" and key != "kind" and key not in _CONFIG_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown configuration key '{key}'")
        values[key] = value
    values.pop("kind", None)
    for key, value in (overrides or {}).items():
        values[str(key)] = value
    recipe = values.pop("recipe", None)
    if recipe is None:
        raise ConfigError(f"{path}: missing required key 'recipe'")
    return build_config(recipe, paper_scale=paper_scale, **values)


class Checkpoint:
    """Resumable partial accumulation, stored as an npz next to the outputs.

    Saving happens every ``interval`` completed realizations (and on budget
    stops), atomically.  Resuming from the file continues accumulation at the
    exact realization index, so the final output is bit-identical to an
    uninterrupted run.  A checkpoint from a different configuration is
    refused.
    """

    def __init__(self, path, expected_hash: str, interval: int = 0,
                 max_new: int | None = None):
        self.path = Path(path)
        self.expected_hash = expected_hash
        self.interval = interval
        self.max_new = max_new
        self.completed = 0
        self.sums = None
        self.sums_sq = None
        self._session_start = 0
        if self.path.exists():
            with np.load(self.path, allow_pickle=False) as data:
                stored = str(data["config_hash"])
                if stored != expected_hash:
                    raise ConfigError(
                        f"checkpoint {self.path} belongs to config {stored}, "
                        f"expected {expected_hash}"
                    )
                self.completed = int(data["completed"])
                self.sums = data["sums"].copy()
                self.sums_sq = data["sums_sq"].copy()
            self._session_start = self.completed

    def update(self, done: int, sums: np.ndarray, sums_sq: np.ndarray) -> None:
        self.completed = done
        self.sums = sums
        self.sums_sq = sums_sq
        stopping = self.max_new is not None and done - self._session_start >= self.max_new
        if stopping or (self.interval > 0 and done % self.interval == 0):
            self.save()

    def should_stop(self, done: int) -> bool:
        return self.max_new is not None and done - self._session_start >= self.max_new

    def save(self) -> None:
        handle, tmp = tempfile.mkstemp(dir=self.path.parent, suffix=".npz.tmp")
        try:
            with os.fdopen(handle, "wb") as stream:
                np.savez(
                    stream,
                    completed=np.int64(self.completed),
                    sums=self.sums,
                    sums_sq=self.sums_sq,
                    config_hash=np.array(self.expected_hash),
                )
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def clear(self) -> None:
        if self.path.exists():
            self.path.unlink()


@dataclass
class RecipeCheck:
    """Outcome of one recipe-level assertion."""

    name: str
    passed: bool
    detail: str


def _run_metadata(config: ExperimentConfig, n_done: int) -> dict:
    return {
        "config_hash": config_hash(config),
        "master_seed": config.master_seed,
        "n_realizations": n_done,
        "code_version": __version__,
        "recipe": config.recipe,
    }


def write_manifest(config: ExperimentConfig, out_dir: Path, extra: dict) -> Path:
    """Echo the resolved configuration (round-trippable) plus run metadata."""
    lines = [f"# {key}: {value}" for key, value in extra.items()]
    lines.extend(f"{key} = {value}" for key, value in config.as_dict().items())
    path = Path(out_dir) / "manifest.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
    return path


@dataclass
class PolarizationResult:
    config: ExperimentConfig
    record: DistributionRecord
    series: PolarizationSeries
    checks: list[RecipeCheck]
    complete: bool
    out_dir: Path | None = None


def run_polarization_experiment(config: ExperimentConfig, out_dir=None,
                                n_workers: int | None = None,
                                max_new_realizations: int | None = None) -> PolarizationResult:
    """Ensemble polarization run for the fig4/fig5 style recipes.

    Writes distribution.csv, polarization.csv and manifest.txt when
    ``out_dir`` is given.  ``max_new_realizations`` budgets the session; a
    checkpoint then lets a later call resume seamlessly.
    """
    if config.kind != "polarization":
        raise ConfigError(f"recipe '{config.recipe}' is not a polarization experiment")
    if max_new_realizations is not None and out_dir is None:
        raise ValueError("budgeted runs need an output directory for the checkpoint")
    workers = resolve_workers(n_workers)
    spec = config.walk_spec()
    plan = config.plan()
    recipe = config.initial_recipe()
    hooks = None
    if out_dir is not None and (config.checkpoint_interval > 0 or max_new_realizations):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        hooks = Checkpoint(out_dir / "checkpoint.npz", config_hash(config),
                           interval=config.checkpoint_interval,
                           max_new=max_new_realizations)
    record = accumulate_distribution(plan, spec, recipe, config.observation_times(),
                                     n_workers=workers, hooks=hooks)
    complete = record.n_realizations >= config.realizations
    series = polarization_series(
        record,
        staggered=config.staggered,
        params={
            "m_sites": config.m_sites,
            "momentum": config.momentum,
            "theta_mean": config.theta_mean,
            "phi_mean": config.phi_mean,
            "theta_halfwidth": config.theta_halfwidth,
            "phi_halfwidth": config.phi_halfwidth,
        },
    )

    checks = _polarization_checks(config, series) if complete else []
    if out_dir is not None:
        out_dir = Path(out_dir)
        if complete:
            _write_polarization_outputs(config, record, series, out_dir)
            if hooks is not None:
                hooks.clear()
        else:
            write_manifest(config, out_dir, {
                **_run_metadata(config, record.n_realizations),
                "status": "checkpointed",
            })
    return PolarizationResult(config=config, record=record, series=series,
                              checks=checks, complete=complete,
                              out_dir=Path(out_dir) if out_dir is not None else None)


def _polarization_checks(config: ExperimentConfig,
                         series: PolarizationSeries) -> list[RecipeCheck]:
    lo, hi = config.window_lo, config.window_hi
    mask = (series.times >= lo) & (series.times <= hi)
    checks: list[RecipeCheck] = []
    critical = config.recipe in ("fig4_critical", "fig4_critical_phionly", "fig5_critical")
    if not mask.any():
        return checks
    if critical and not config.staggered:
        worst = float(series.dp[mask].min())
        checks.append(RecipeCheck(
            name="polarization_positive",
            passed=worst > 0.0,
            detail=f"min dP over t in [{lo}, {hi}] = {worst:.6g}",
        ))
    elif critical and config.staggered:
        s, _ = staggering_metric(series, window=(lo, hi))
        worst = float(s[mask].min())
        checks.append(RecipeCheck(
            name="staggered_polarization_positive",
            passed=worst > 0.0,
            detail=f"min (-1)^t dP over t in [{lo}, {hi}] = {worst:.6g}",
        ))
    elif config.staggered:
        _, fraction = staggering_metric(series, window=(lo, hi))
        checks.append(RecipeCheck(
            name="sign_consistency_scrambled",
            passed=0.25 <= fraction <= 0.75,
            detail=f"staggered-sign fraction over [{lo}, {hi}] = {fraction:.3f}",
        ))
    return checks


def _write_polarization_outputs(config: ExperimentConfig, record: DistributionRecord,
                                series: PolarizationSeries, out_dir: Path) -> None:
    meta = _run_metadata(config, record.n_realizations)
    meta.update(record.initial_state)
    dist_rows = []
    for it, t in enumerate(record.times):
        for iq, q in enumerate(record.q):
            for channel, sigma in ((0, 1), (1, -1)):
                dist_rows.append((
                    int(t), int(q), sigma,
                    record.probs[it, iq, channel],
                    record.stderr[it, iq, channel],
                ))
    write_table(
        dist_rows,
        [("t", "int"), ("q", "int"), ("sigma_out", "int"), ("P", "float"), ("stderr", "float")],
        out_dir / "distribution.csv",
        metadata=meta,
    )
    pol_rows = [
        (int(t), series.dp[i], series.stderr[i], 1 if t % 2 == 0 else -1)
        for i, t in enumerate(series.times)
    ]
    write_table(
        pol_rows,
        [("t", "int"), ("dP", "float"), ("stderr", "float"), ("staggered_sign", "int")],
        out_dir / "polarization.csv",
        metadata=meta,
    )
    write_manifest(config, out_dir, {**meta, "status": "complete"})


@dataclass
class DosResult:
    config: ExperimentConfig
    histogram: DosHistogram
    peaks: dict[str, float]
    median_density: float
    checks: list[RecipeCheck]
    out_dir: Path | None = None


def run_dos_experiment(config: ExperimentConfig, out_dir=None,
                       n_workers: int | None = None) -> DosResult:
    """Disorder-averaged density of states with a peak report.

    The four symmetric energies 0, +pi/2, -pi/2 and pi are probed against the
    median bin density; writes dos.csv and manifest.txt when ``out_dir`` is
    given.
    """
    if config.kind != "dos":
        raise ConfigError(f"recipe '{config.recipe}' is not a density-of-states experiment")
    workers = resolve_workers(n_workers)
    histogram = dos_histogram(config.walk_spec(), config.n_bins, config.plan(),
                              n_workers=workers)
    targets = {"0": 0.0, "+pi/2": _PI / 2, "-pi/2": -_PI / 2, "pi": _PI}
    peaks = {name: histogram.peak_density(energy) for name, energy in targets.items()}
    median = float(np.median(histogram.density))
    checks = []
    if config.theta_halfwidth > 0.0 or config.phi_halfwidth > 0.0:
        factor = config.peak_factor
        worst = min(peaks.values()) / median if median > 0 else math.inf
        checks.append(RecipeCheck(
            name="dos_peaks",
            passed=all(value >= factor * median for value in peaks.values()),
            detail=f"min peak/median = {worst:.2f} (threshold {factor})",
        ))
    if out_dir is not None:
        out_dir = Path(out_dir)
        meta = _run_metadata(config, config.realizations)
        meta.update({f"peak_{name}": f"{value:.6g}" for name, value in peaks.items()})
        meta["median_density"] = f"{median:.6g}"
        rows = [
            (histogram.bin_centers[i], histogram.density[i], histogram.stderr[i])
            for i in range(histogram.density.size)
        ]
        write_table(
            rows,
            [("bin_center", "float"), ("density", "float"), ("stderr", "float")],
            out_dir / "dos.csv",
            metadata=meta,
        )
        write_manifest(config, out_dir, {**meta, "status": "complete"})
    return DosResult(config=config, histogram=histogram, peaks=peaks,
                     median_density=median, checks=checks,
                     out_dir=Path(out_dir) if out_dir is not None else None)


@dataclass
class SpreadResult:
    config: ExperimentConfig
    times: np.ndarray
    displacement: np.ndarray
    pearson_log_sq: float
    checks: list[RecipeCheck]
    out_dir: Path | None = None


def run_sinai_experiment(config: ExperimentConfig, out_dir=None,
                         n_workers: int | None = None) -> SpreadResult:
    """Mean-displacement table for the strong-disorder (slow-spreading) walk.

    Records <|q|>(t) at power-of-two times and reports the Pearson
    correlation of <|q|> with ln(t)^2 over the configured window.
    """
    if config.kind != "spread":
        raise ConfigError(f"recipe '{config.recipe}' is not a spreading experiment")
    workers = resolve_workers(n_workers)
    record = accumulate_distribution(config.plan(), config.walk_spec(),
                                     config.initial_recipe(), config.observation_times(),
                                     n_workers=workers)
    displacement = mean_displacement(record)
    mask = (record.times >= config.window_lo) & (record.times <= config.window_hi)
    log_sq = np.log(record.times[mask].astype(float)) ** 2
    pearson = float(np.corrcoef(displacement[mask], log_sq)[0, 1])
    checks = [RecipeCheck(
        name="log_squared_spreading",
        passed=pearson >= config.corr_min,
        detail=f"Pearson(<|q|>, ln^2 t) = {pearson:.4f} over t in "
               f"[{config.window_lo}, {config.window_hi}]",
    )]
    if out_dir is not None:
        out_dir = Path(out_dir)
        meta = _run_metadata(config, record.n_realizations)
        meta["pearson_log_sq"] = f"{pearson:.6g}"
        rows = [
            (int(t), displacement[i], math.log(t) ** 2 if t > 0 else 0.0)
            for i, t in enumerate(record.times)
        ]
        write_table(
            rows,
            [("t", "int"), ("mean_abs_q", "float"), ("log_sq_t", "float")],
            out_dir / "spread.csv",
            metadata=meta,
        )
        write_manifest(config, out_dir, {**meta, "status": "complete"})
    return SpreadResult(config=config, times=record.times, displacement=displacement,
                        pearson_log_sq=pearson, checks=checks,
                        out_dir=Path(out_dir) if out_dir is not None else None)


def contrast_ratio(critical: PolarizationSeries, scrambled: PolarizationSeries,
                   window: tuple[int, int] = (20, 40)) -> float:
    """Mean |dP| of the critical run over the scrambled one in a time window."""
    lo, hi = window
    mask_c = (critical.times >= lo) & (critical.times <= hi)
    mask_s = (scrambled.times >= lo) & (scrambled.times <= hi)
    if not mask_c.any() or not mask_s.any():
        raise ValueError(f"window {window} not covered by both series")
    denom = float(np.abs(scrambled.dp[mask_s]).mean())
    if denom == 0.0:
        return math.inf
    return float(np.abs(critical.dp[mask_c]).mean()) / denom


def run_comparison(run_dir, out_dir=None) -> dict:
    """Contrast a finished polarization run with the closed-form prediction.

    Loads polarization.csv from ``run_dir``, derives the predicted sign
    pattern (+1 throughout for the zero-momentum protocol, alternating for
    the staggered one), and reports the per-window agreement fraction plus a
    normalized analytic spin-polarization profile for overlay plots.
    """
    run_dir = Path(run_dir)
    pol_path = run_dir / "polarization.csv"
    manifest_path = run_dir / "manifest.txt"
    if not pol_path.exists() or not manifest_path.exists():
        raise FileNotFoundError(
            f"comparison needs polarization.csv and manifest.txt under {run_dir}"
        )
    config = parse_config(manifest_path)
    _, _, rows = read_table(pol_path)
    times = np.array([int(r[0]) for r in rows])
    dp = np.array([float(r[1]) for r in rows])

    staggered = config.staggered
    predicted = np.where(times % 2 == 0, 1.0, -1.0) if staggered else np.ones_like(dp)
    lo, hi = config.window_lo, config.window_hi
    mask = (times >= lo) & (times <= hi)
    agree = (np.sign(dp[mask]) == predicted[mask])
    report = {
        "recipe": config.recipe,
        "staggered": staggered,
        "window": (lo, hi),
        "agreement_fraction": float(agree.mean()),
        "n_compared": int(mask.sum()),
    }

    t_ref = max(float(hi), 2.0)
    xi = correlation_scale(t_ref)
    q_grid = np.arange(0, int(math.ceil(6 * xi)) + 1)
    aligned = np.array([critical_distribution(t_ref, q, 1) for q in q_grid])
    anti = np.array([critical_distribution(t_ref, q, -1) for q in q_grid])
    profile = aligned - anti
    profile /= profile[0]
    if out_dir is not None:
        out_dir = Path(out_dir)
        meta = {
            "config_hash": config_hash(config),
            "source_run": str(run_dir),
            "code_version": __version__,
            "agreement_fraction": f"{report['agreement_fraction']:.6g}",
            "reference_time": f"{t_ref:.6g}",
        }
        rows_out = [
            (int(t), dp[i], int(predicted[i]), int(np.sign(dp[i]) == predicted[i]))
            for i, t in enumerate(times)
        ]
        write_table(
            rows_out,
            [("t", "int"), ("dP", "float"), ("predicted_sign", "int"), ("agree", "int")],
            out_dir / "comparison.csv",
            metadata=meta,
        )
        write_table(
            [(int(q), profile[i]) for i, q in enumerate(q_grid)],
            [("q", "int"), ("polarization_profile", "float")],
            out_dir / "profile.csv",
            metadata=meta,
        )
    report["profile_q"] = q_grid
    report["profile"] = profile
    return report
