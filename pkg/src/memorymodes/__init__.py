"""Simulation toolkit for a two-level emitter in structured reservoirs.

Four equivalent descriptions of the same decay problem are implemented and
cross-checked numerically: complex amplitude equations in the one-excitation
sector, a time-local emitter master equation with time-dependent
coefficients, dissipative master equations on the extended emitter+mode
space, and stochastic trajectory unravelings of both.
"""

from .amplitudes import (
    LAB,
    ROTATING,
    AmplitudeState1,
    AmplitudeState2,
    AmplitudeTrajectory,
    closed_form_oracle,
    double_mode_generator,
    expm_oracle,
    norm_balance_residuals,
    propagate_double,
    propagate_single,
    single_mode_generator,
)
from .config import ModelConfig, validate_config, validate_config_text
from .density import (
    DensityMatrix,
    HamiltonianSpec,
    atom_density_from_amplitudes,
    density_series_lab_frame,
    double_sector_hamiltonian,
    evolve_atom_timelocal,
    evolve_lindblad_double,
    evolve_lindblad_single,
    extended_density_from_amplitudes,
    partial_trace_atom,
    partial_trace_pseudomodes,
    single_sector_hamiltonian,
)
from .errors import (
    AllPointsInvalid,
    ConsistencyWarning,
    GridMismatch,
    IllConditioned,
    InvalidRates,
    MemoryModesError,
    NonPhysical,
    ParseError,
    RateGapTooWide,
    SectorLeak,
    StepTooLarge,
    ToleranceNotMet,
)
from .info import InfoSeries, info_series, mutual_information, von_neumann_entropy
from .models import (
    BandGapModel,
    LorentzianModel,
    TimeGrid,
    TwoPseudomodeConstants,
    bandgap_density,
    derive_two_pseudomode_constants,
    lorentzian_density,
)
from .rates import (
    MemoryIdentityReport,
    RateTrajectory,
    intermode_memory_identity,
    memory_identity_double,
    memory_identity_single,
    rates_from_amplitudes,
    rates_pseudomode_form,
)
from .trajectories import (
    ComparisonReport,
    McwfEnsemble,
    NmqjEnsemble,
    compare_unravelings,
    ensemble_ground_population,
    run_mcwf_pseudomode,
    run_nmqj,
    traced_ensemble_atom_state,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AllPointsInvalid",
    "AmplitudeState1",
    "AmplitudeState2",
    "AmplitudeTrajectory",
    "BandGapModel",
    "ComparisonReport",
    "ConsistencyWarning",
    "DensityMatrix",
    "GridMismatch",
    "HamiltonianSpec",
    "IllConditioned",
    "InfoSeries",
    "InvalidRates",
    "LAB",
    "LorentzianModel",
    "McwfEnsemble",
    "MemoryIdentityReport",
    "MemoryModesError",
    "ModelConfig",
    "NmqjEnsemble",
    "NonPhysical",
    "ParseError",
    "RateGapTooWide",
    "RateTrajectory",
    "ROTATING",
    "SectorLeak",
    "StepTooLarge",
    "TimeGrid",
    "ToleranceNotMet",
    "TwoPseudomodeConstants",
    "atom_density_from_amplitudes",
    "bandgap_density",
    "closed_form_oracle",
    "compare_unravelings",
    "density_series_lab_frame",
    "derive_two_pseudomode_constants",
    "double_mode_generator",
    "double_sector_hamiltonian",
    "ensemble_ground_population",
    "evolve_atom_timelocal",
    "evolve_lindblad_double",
    "evolve_lindblad_single",
    "expm_oracle",
    "extended_density_from_amplitudes",
    "info_series",
    "intermode_memory_identity",
    "lorentzian_density",
    "memory_identity_double",
    "memory_identity_single",
    "mutual_information",
    "norm_balance_residuals",
    "partial_trace_atom",
    "partial_trace_pseudomodes",
    "propagate_double",
    "propagate_single",
    "rates_from_amplitudes",
    "rates_pseudomode_form",
    "run_mcwf_pseudomode",
    "run_nmqj",
    "single_mode_generator",
    "single_sector_hamiltonian",
    "traced_ensemble_atom_state",
    "validate_config",
    "validate_config_text",
    "von_neumann_entropy",
]
