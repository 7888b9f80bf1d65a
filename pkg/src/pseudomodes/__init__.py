"""Structured environments as damped discrete modes, with exact cross checks.

The package maps an environment given by a meromorphic spectral density onto
a finite family of locally damped bosonic modes, rotates complex-coupled
two-mode families into completely positive Lindblad form, integrates the
resulting master equations, unravels them into quantum-jump trajectories, and
validates everything against brute-force single-excitation solvers.
"""

from .errors import (
    ClassificationError,
    ConfigError,
    EngineError,
    InvalidModelError,
    PositivityViolationError,
    RegularizationError,
    SingularRotationError,
    StepUnderflowError,
    TruncationGuardError,
    UnsupportedRegularizationError,
)
from .spectral import (
    CorrelationSpec,
    LorentzianSum,
    LorentzianTerm,
    Pole,
    PoleSet,
    PositivityReport,
    check_positivity_grid,
    correlation,
    default_grid,
    eval_density,
    lorentzian_to_poles,
)
from .mapping import (
    DiscreteMode,
    DiscreteModeSet,
    RegularizedMode,
    RegularizedModeSet,
    RotationCheck,
    TwoModeRotation,
    build_discrete_modes,
    mode_correlation,
    regularized_correlation,
    two_mode_regularize,
    verify_rotation_numeric,
)
from .hilbert import (
    SpaceLayout,
    SystemSpec,
    basis_state,
    destroy,
    eigenoperator,
    embed,
    embed_system,
    expectation,
    mode_ops,
    partial_trace_modes,
    top_fock_populations,
    vacuum_embedding,
)
from .dynamics import (
    EvolutionResult,
    Generator,
    GeneratorSpec,
    InvariantViolationError,
    RotatingTerm,
    build_generator,
    build_lindblad_direct,
    build_lindblad_regularized,
    build_pathological,
    equivalence_check,
    evolve,
    free_hamiltonian_diagonal,
    rotate_frame,
)
from .trajectories import (
    EnsembleResult,
    NoJumpPropagator,
    TrajectoryConfig,
    mcwf_run,
)
from .oracle import (
    AmplitudeState,
    DiscretizedBath,
    auxiliary_correlation_check,
    damped_rabi_amplitude,
    discretized_bath_solve,
    single_excitation_solve,
)

__version__ = "0.1.0"

__all__ = [
    "AmplitudeState",
    "ClassificationError",
    "ConfigError",
    "CorrelationSpec",
    "DiscreteMode",
    "DiscreteModeSet",
    "DiscretizedBath",
    "EngineError",
    "EnsembleResult",
    "EvolutionResult",
    "Generator",
    "GeneratorSpec",
    "InvalidModelError",
    "InvariantViolationError",
    "LorentzianSum",
    "LorentzianTerm",
    "NoJumpPropagator",
    "Pole",
    "PoleSet",
    "PositivityReport",
    "PositivityViolationError",
    "RegularizationError",
    "RegularizedMode",
    "RegularizedModeSet",
    "RotatingTerm",
    "RotationCheck",
    "SingularRotationError",
    "SpaceLayout",
    "StepUnderflowError",
    "SystemSpec",
    "TrajectoryConfig",
    "TruncationGuardError",
    "TwoModeRotation",
    "UnsupportedRegularizationError",
    "auxiliary_correlation_check",
    "basis_state",
    "build_discrete_modes",
    "build_generator",
    "build_lindblad_direct",
    "build_lindblad_regularized",
    "build_pathological",
    "check_positivity_grid",
    "correlation",
    "damped_rabi_amplitude",
    "default_grid",
    "destroy",
    "discretized_bath_solve",
    "eigenoperator",
    "embed",
    "embed_system",
    "equivalence_check",
    "eval_density",
    "evolve",
    "expectation",
    "free_hamiltonian_diagonal",
    "lorentzian_to_poles",
    "mcwf_run",
    "mode_correlation",
    "mode_ops",
    "partial_trace_modes",
    "regularized_correlation",
    "rotate_frame",
    "single_excitation_solve",
    "top_fock_populations",
    "two_mode_regularize",
    "vacuum_embedding",
    "verify_rotation_numeric",
]
