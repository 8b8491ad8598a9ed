"""Structured low-rank approximation by Newton-like tangent projections."""

from .linalg import SvdFactors, frobenius_inner, gram_schmidt, min_norm_solve, rank_one_inner, svd
from .manifold import GapTooSmall, RankProjection, normal_inner, project_rank, tangent_combine, tangent_inner
from .solver import (
    ConvergenceTrace,
    Method,
    SlraProblem,
    SlraResult,
    StoppingCriteria,
    Termination,
    choose_method,
    solve,
    step_cadzow,
    step_newton_v1,
    step_newton_v2,
)
from .subspace import AffineStructure, from_generators

__version__ = "0.1.0"
