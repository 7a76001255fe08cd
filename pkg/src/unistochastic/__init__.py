"""Unistochastic phase completion and the trace formula for transition probabilities.

A bistochastic matrix ``p`` of transition probabilities between two sets of
exclusive outcomes is completed to a unitary ``S = sqrt(p) * exp(1j * phi)``
so that ``p[i, j] = Trace(P_i S P_j S^dagger)``.
"""
from ._kernels import BACKEND
from .errors import (BoundsError, ConfigError, DimensionError, DomainError, GroupError,
                     ReconstructionError, RepresentationError, SupportError,
                     UnistochasticError, ValidationError)
from .linalg_core import (Projector, extract_probability, extract_probability_fast,
                          haar_unitary, transition_probability_matrix, transported_projector,
                          unitarity_residual)
from .modality import (ModalitySet, ProbabilityMatrix, birkhoff_sample,
                       independent_parameter_count, normalization_constraint_rank,
                       validate_bistochastic)
from .phase_solver import (Certificate, PhaseMatrix, SolveReport, SolverConfig, apply_phases,
                           certify_n3, gauge_fix, solve_phases, solve_phases_closed_form_n2,
                           sqrt_matrix)

__version__ = "0.1.0"
