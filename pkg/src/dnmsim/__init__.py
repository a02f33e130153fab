"""Open-system simulator for a lossy cavity coupled to driven qubits.

The package builds collective qubit-cavity models with photon loss, evolves
them with a fixed-step integrator, quantifies memory effects through the
revivals of the cavity's distance from its steady state, fits effective
time-dependent decay rates, and exposes the cavity's memristive
input/output behaviour.  A command-line interface runs the packaged
parameter studies and writes delimited tables, JSON summaries, and SVG
figures.
"""
from .errors import (
    ConfigError,
    DimensionMismatchError,
    DnmSimError,
    FitError,
    IntegrationError,
    LayoutError,
    NonHermitianError,
    ParameterError,
    TruncationWarning,
    ValidityWarning,
)
from .hilbert import OperatorSet, SystemLayout, basis_state, build_operators, partial_trace_qubits
from .model import (
    CavityDrive,
    DecayRateModel,
    JumpTerm,
    MasterEquation,
    ModelParams,
    QubitDrive,
    decay_master_equation,
    hamiltonian_at,
    hamiltonian_tc,
    lindblad_rhs,
    lindblad_rhs_tdecay,
    master_equation,
)
from .dynamics import IntegrationConfig, Recorder, Trajectory, evolve, evolve_piecewise
from .measures import (
    DnmResult,
    MemristorRecord,
    dnm,
    exchange_operator,
    loop_area,
    memristor_observables,
    pinch_metric,
    trace_distance,
    trace_distance_to_vacuum,
)
from .fitting import (
    DEFAULT_DECAY_BOUNDS,
    DecayFit,
    PowerLawFit,
    fit_decay_rate,
    fit_power_law,
)
from .experiments import (
    AxisSpec,
    ExperimentResult,
    PointFailure,
    SweepSpec,
    DEFAULT_DNM_CONFIG,
    DEFAULT_SWITCH_SCHEDULE,
    RESONANT_DRIVE_FREQUENCY,
    SUPPRESSING_DRIVE_FREQUENCY,
    run_decay_fit,
    run_dnm_map,
    run_extremal_dnm,
    run_memristor,
    run_scaling,
    run_simulate,
    run_switching,
)
from .config import RunConfig, parse_config
from ._version import __version__

__all__ = [
    "__version__",
    # errors
    "DnmSimError",
    "DimensionMismatchError",
    "NonHermitianError",
    "LayoutError",
    "ParameterError",
    "FitError",
    "ConfigError",
    "IntegrationError",
    "ValidityWarning",
    "TruncationWarning",
    # hilbert
    "SystemLayout",
    "OperatorSet",
    "build_operators",
    "basis_state",
    "partial_trace_qubits",
    # model
    "ModelParams",
    "QubitDrive",
    "CavityDrive",
    "DecayRateModel",
    "JumpTerm",
    "MasterEquation",
    "master_equation",
    "decay_master_equation",
    "hamiltonian_tc",
    "hamiltonian_at",
    "lindblad_rhs",
    "lindblad_rhs_tdecay",
    # dynamics
    "IntegrationConfig",
    "Recorder",
    "Trajectory",
    "evolve",
    "evolve_piecewise",
    # measures
    "trace_distance",
    "trace_distance_to_vacuum",
    "dnm",
    "DnmResult",
    "MemristorRecord",
    "memristor_observables",
    "exchange_operator",
    "pinch_metric",
    "loop_area",
    # fitting
    "PowerLawFit",
    "DecayFit",
    "fit_power_law",
    "fit_decay_rate",
    "DEFAULT_DECAY_BOUNDS",
    # experiments
    "AxisSpec",
    "SweepSpec",
    "PointFailure",
    "ExperimentResult",
    "DEFAULT_DNM_CONFIG",
    "DEFAULT_SWITCH_SCHEDULE",
    "RESONANT_DRIVE_FREQUENCY",
    "SUPPRESSING_DRIVE_FREQUENCY",
    "run_dnm_map",
    "run_scaling",
    "run_extremal_dnm",
    "run_switching",
    "run_decay_fit",
    "run_memristor",
    "run_simulate",
    # config
    "RunConfig",
    "parse_config",
]
