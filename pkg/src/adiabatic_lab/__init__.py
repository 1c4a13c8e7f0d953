"""Numerical laboratory for finite-time adiabatic evolution errors."""

from .errors import (
    AdiabaticLabError,
    ConfigError,
    GapClosureError,
    IntegrationFailureError,
    OrderUndeterminedError,
    SamplingError,
    StiffnessError,
)
from .schedule import (
    AverageGapResult,
    Envelope,
    HamiltonianSchedule,
    HermitianTerm,
    SpectralFrame,
    average_gaps,
    builtin_schedule,
    derivative,
    endpoint_derivative_order,
    evaluate,
    load_schedule,
    path_length,
    schedule_from_config,
    schedule_to_config,
    spectral_frame,
)
from .propagator import (
    DEFAULT_INTEGRATOR,
    EvolutionResult,
    IntegratorConfig,
    evolve,
    evolve_batch,
    true_error,
    true_error_result,
)
from .asymptotics import (
    AsymptoticData,
    EndpointAmplitudes,
    endpoint_amplitudes,
    hyperadiabatic_bound,
    rigorous_bound,
    switching_coefficient,
    switching_error,
    typical_coefficient,
    typical_error_closed,
    typical_error_windowed,
)
from .experiments import (
    DIAGNOSTIC_FIELDS,
    SCENARIO_INTEGRATOR,
    SweepConfig,
    SweepRecord,
    TypicalSettings,
    all_failed,
    detect_hyperadiabatic,
    emit_csv,
    evaluate_diagnostics,
    format_csv,
    run_sweep,
    scenario_config,
    timescale_grid,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
