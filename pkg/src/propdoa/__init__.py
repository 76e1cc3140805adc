"""Propagator-family direction-of-arrival estimation for uniform linear arrays.

The package builds angular spectra from propagator operators extracted
directly from covariance blocks (no eigendecomposition), alongside MUSIC
and ESPRIT baselines, plus a Monte Carlo harness and a CLI for running
reproducible experiments.
"""

from .array_model import (
    ArrayConfig,
    SteeringMatrix,
    array_manifold,
    channel_matrix,
    exchange_matrix,
    steering_vector,
)
from .covariance import (
    CovarianceEstimate,
    PartitionScheme,
    covariance_block,
    make_partition,
    sample_covariance,
    selection_matrix,
    theoretical_covariance,
)
from .estimators import (
    AngularSpectrum,
    DoaEstimate,
    EigenSubspaces,
    EspritDoA,
    ExtendedPropagatorDoA,
    MusicDoA,
    PropagatorDoA,
    eigen_subspaces,
    esprit,
    estimate_for_method,
    estimator_from_method_id,
    find_peaks,
    music_spectrum,
    parse_method_id,
    scan_grid,
    spectrum_for_method,
    spectrum_from_operator,
)
from .exceptions import (
    ApplicabilityError,
    EstimationError,
    IllConditionedError,
    PartitionError,
    ScenarioError,
    UndefinedCorrelationError,
)
from .experiments import (
    CorrelationMatrix,
    ExperimentPlan,
    RmseCurve,
    averaged_spectra,
    averaged_spectrum,
    correlate_methods,
    derive_trial_seed,
    rmse,
    rmse_vs_snr,
    spectrum_correlation,
)
from .propagators import (
    OperatorCatalog,
    PropagatorOperator,
    assembled_psi,
    enumerate_operators,
    extended_propagator,
    propagator_q1,
    propagator_q2,
    pseudo_inverse,
    standard_propagator,
    transfer_operator,
)
from .synthesis import (
    Scenario,
    SnapshotBlock,
    generate_sources,
    noise_variance_from_snr,
    simulate_snapshots,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig",
    "SteeringMatrix",
    "steering_vector",
    "array_manifold",
    "channel_matrix",
    "exchange_matrix",
    "Scenario",
    "SnapshotBlock",
    "noise_variance_from_snr",
    "generate_sources",
    "simulate_snapshots",
    "CovarianceEstimate",
    "PartitionScheme",
    "sample_covariance",
    "theoretical_covariance",
    "make_partition",
    "selection_matrix",
    "covariance_block",
    "PropagatorOperator",
    "OperatorCatalog",
    "pseudo_inverse",
    "standard_propagator",
    "propagator_q1",
    "propagator_q2",
    "transfer_operator",
    "extended_propagator",
    "assembled_psi",
    "enumerate_operators",
    "AngularSpectrum",
    "DoaEstimate",
    "EigenSubspaces",
    "scan_grid",
    "eigen_subspaces",
    "spectrum_from_operator",
    "music_spectrum",
    "esprit",
    "find_peaks",
    "parse_method_id",
    "spectrum_for_method",
    "estimate_for_method",
    "MusicDoA",
    "EspritDoA",
    "PropagatorDoA",
    "ExtendedPropagatorDoA",
    "estimator_from_method_id",
    "ExperimentPlan",
    "RmseCurve",
    "CorrelationMatrix",
    "derive_trial_seed",
    "rmse",
    "averaged_spectrum",
    "averaged_spectra",
    "rmse_vs_snr",
    "spectrum_correlation",
    "correlate_methods",
    "ApplicabilityError",
    "EstimationError",
    "IllConditionedError",
    "PartitionError",
    "ScenarioError",
    "UndefinedCorrelationError",
    "__version__",
]
