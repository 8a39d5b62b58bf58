"""ADI Legendre-Galerkin solver for multi-term time-fractional problems."""

from .basis import ModalField2D, SpectralBasis1D, build_basis, evaluate_field, l2_error
from .problems import PROBLEM_IDS, ProblemSpec, get_problem
from .solver import RunResult, TransformedProblem, reduce_order, run
from .weights import apply_gl, binomial_weights, shifted_weights

__all__ = [
    "ModalField2D",
    "SpectralBasis1D",
    "build_basis",
    "evaluate_field",
    "l2_error",
    "PROBLEM_IDS",
    "ProblemSpec",
    "get_problem",
    "RunResult",
    "TransformedProblem",
    "reduce_order",
    "run",
    "apply_gl",
    "binomial_weights",
    "shifted_weights",
]
