"""Two-color photoionization of rubidium as a double-slit experiment in energy space."""

from .errors import (AbsorberOverflowError, AtomSlitError, BracketingError, ConfigurationError,
                     DomainError, MatchingError, MeshRefinementError, ResolutionError,
                     SequencingError, SingularTermError, ToleranceError, UndefinedPhaseError,
                     ValidationError)
from .grid_potential import ModelPotentialParams, RadialGrid, load_params, potential
from .interference import (InterferenceResult, TwoColorSetup, balance_detuning, control_scheme,
                           interference, interference_dcs, pair_study, pathway_amplitudes,
                           phase_difference, stochastic_average)
from .observables import PartialWaveAmplitudes
from .perturbation import PathwayAmplitude, d1_amplitude, d2_partial, occupation_pt
from .pulses import LaserPulse
from .structure import AtomStructure, BoundState, ContinuumState, solve_bound, solve_continuum
from .tdse import ChannelWavepacket, Hamiltonian, project_continuum, propagate

__all__ = [
    "AbsorberOverflowError", "AtomSlitError", "AtomStructure", "BoundState", "BracketingError",
    "ChannelWavepacket", "ConfigurationError", "ContinuumState", "DomainError", "Hamiltonian",
    "InterferenceResult", "LaserPulse", "MatchingError", "MeshRefinementError", "ModelPotentialParams",
    "PartialWaveAmplitudes", "PathwayAmplitude", "RadialGrid", "ResolutionError", "SequencingError",
    "SingularTermError", "ToleranceError", "TwoColorSetup", "UndefinedPhaseError", "ValidationError",
    "balance_detuning", "control_scheme", "d1_amplitude", "d2_partial", "interference",
    "interference_dcs", "load_params", "occupation_pt", "pair_study", "pathway_amplitudes",
    "phase_difference", "potential", "project_continuum", "propagate", "solve_bound",
    "solve_continuum", "stochastic_average",
]

__version__ = "0.1.0"
