"""Stochastic clock-synchronization networks: simulation and exact moment analytics."""

from .analytics import (
    SpectralData,
    StationaryLimits,
    d_closed_form,
    h_functions,
    moments_closed_form,
    ode_moments,
    poisson_power_expectation,
    spectral,
    stationary_limits,
    u_functions,
)
from .conditional import (
    ConditionalState,
    EpochSequence,
    conditional_given_count,
    conditional_moments,
    free_moment_step,
    jump_moment_step,
    poisson_average_given_count,
    rao_blackwell_ensemble,
)
from .errors import (
    ClockSyncError,
    CoincidentEigenvalueError,
    DegenerateRatesError,
    DomainError,
    ForbiddenReceiverError,
    InvalidInputError,
    NoStationaryLimitError,
    NoSynchronizationPhaseError,
)
from .model import (
    DerivedScalars,
    ModelParams,
    MomentVector,
    NodePair,
    derived_scalars,
    expected_post_jump_moments,
    jump_map,
    moments_of_config,
    pair_distribution,
)
from .phases import PhaseQuery, PhaseResult, classify, exponent_fit, fit_log_slope, phi, scale_curve
from .simulator import (
    Deterministic,
    EnsembleStats,
    Exponential,
    Gamma,
    InitialCondition,
    SimConfig,
    Uniform,
    free_step,
    run_ensemble,
    run_replica,
)

__version__ = "0.1.0"
