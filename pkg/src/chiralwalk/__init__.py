"""Disordered chiral quantum walks in one dimension.

Simulation and analysis toolkit for the walk's disorder ensembles: state
evolution with site-dependent coins, reproducible realization sampling, dense
Floquet spectra and density of states, spin-polarization protocols, and the
closed-form critical (slow-diffusion) distribution.
"""

__version__ = "0.1.0"

from .lattice import (  # noqa: F401
    CHIRAL_MINUS,
    CHIRAL_PLUS,
    SIGMA_1,
    SIGMA_2,
    SIGMA_3,
    WalkSpec,
    WalkerState,
    apply_step,
    delocalized_state,
    evolve,
    floquet_matrix,
    localized_state,
)
from .disorder import (  # noqa: F401
    AngleField,
    EnsemblePlan,
    derive_seed,
    sample_realization,
)
from .spectral import (  # noqa: F401
    DosHistogram,
    SpectrumRecord,
    clean_dispersion,
    dos_histogram,
    eigendecompose,
    resolvent,
    spectral_weights,
    symmetry_report,
)
from .observables import (  # noqa: F401
    DistributionRecord,
    InitialStateRecipe,
    PolarizationSeries,
    accumulate_distribution,
    fit_localization_length,
    mean_displacement,
    polarization_series,
    spin_resolved_probability,
    staggering_metric,
)
from .analytic import (  # noqa: F401
    classify_phase,
    correlation_scale,
    critical_distribution,
    frequency_propagator,
    integrated_frequency_probability,
    phase_diagnostics,
    scaling_function,
    topological_angle,
)
from .experiments import (  # noqa: F401
    ExperimentConfig,
    build_config,
    parse_config,
    run_comparison,
    run_dos_experiment,
    run_polarization_experiment,
    run_sinai_experiment,
)
