"""One-step SLRA maps and the outer iteration.

Three steps are provided. Each takes a point ``m`` of the structure and
the target rank:

``step_newton_v1``
    Project ``m`` onto the closest point of ``E`` intersected with the
    tangent space at the rank-``r`` truncation, parametrised by the
    structure basis (small when ``d`` and the corank are small).
``step_newton_v2``
    The same projection, parametrised by the tangent space and constrained
    through the orthogonal complement of the structure.
``step_cadzow``
    Truncate the SVD, then project orthogonally back onto ``E``.
"""

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import as_matrix, min_norm_solve
from .manifold import (
    DEFAULT_GAP_TOL,
    GapTooSmall,
    normal_inner,
    project_rank,
    tangent_combine,
    tangent_inner,
)
from .subspace import AffineStructure

__all__ = [
    "Method",
    "Termination",
    "StoppingCriteria",
    "SlraProblem",
    "TraceRecord",
    "ConvergenceTrace",
    "SlraResult",
    "step_newton_v1",
    "step_newton_v2",
    "step_cadzow",
    "choose_method",
    "solve",
]

DIVERGENCE_FACTOR = 10.0
MEMBERSHIP_TOL = 1e-8


class Method(str, enum.Enum):
    NEWTON_V1 = "newton_v1"
    NEWTON_V2 = "newton_v2"
    CADZOW = "cadzow"
    AUTO = "auto"


class Termination(str, enum.Enum):
    STEP_CONVERGED = "step_converged"
    SIGMA_CONVERGED = "sigma_converged"
    MAX_ITERS = "max_iters"
    GAP_FAILURE = "gap_failure"
    DIVERGED = "diverged"


def _projection(m, r, proj):
    return project_rank(m, r) if proj is None else proj


def step_newton_v1(m, structure: AffineStructure, r, proj=None):
    """One Newton step computed from the structure side.

    Solves ``A a = b`` in the minimum-norm sense, with
    ``A[k, l] = <N_k, E_l>`` and ``b[k] = <N_k, Mt - m>``, and returns
    ``m + sum_l a_l E_l``. The result lies in the structure exactly.

    Raises :class:`~slra.manifold.GapTooSmall` when the truncation is not unique.
    """
    m = as_matrix(m)
    proj = _projection(m, r, proj)
    A = normal_inner(proj, structure.basis).T
    b = normal_inner(proj, proj.truncated - m)
    a = min_norm_solve(A, b)
    return m + structure.combine(a)


def step_newton_v2(m, structure: AffineStructure, r, proj=None):
    """One Newton step computed from the tangent side.

    Solves ``A' a = b'`` with ``A'[k, l] = <E'_k, T_l>`` over the complement
    basis and ``b'[k] = <E'_k, m - Mt>``, then returns
    ``Mt + sum_l a_l T_l``.
    """
    m = as_matrix(m)
    proj = _projection(m, r, proj)
    comp = structure.complement()
    A = tangent_inner(proj, comp)
    b = comp.reshape(comp.shape[0], -1) @ (m - proj.truncated).ravel()
    a = min_norm_solve(A, b)
    return proj.truncated + tangent_combine(proj, a)


def step_cadzow(m, structure: AffineStructure, r, proj=None):
    """One lift-and-project step: SVD truncation followed by projection onto ``E``."""
    m = as_matrix(m)
    proj = _projection(m, r, proj)
    return structure.project(proj.truncated)


_STEPS = {
    Method.NEWTON_V1: step_newton_v1,
    Method.NEWTON_V2: step_newton_v2,
    Method.CADZOW: step_cadzow,
}


def choose_method(p, q, r, d):
    """Pick the Newton variant with the smaller dominant cost term.

    ``newton_v1`` costs about ``d (p-r)(q-r)`` inner products,
    ``newton_v2`` about ``(pq-d)(p+q-r) r``. When ``d < (p-r)(q-r)`` the
    structure and the tangent space generically do not meet, the two
    variants stop computing the same point, and only ``newton_v1`` keeps
    its iterates in the structure; it is chosen regardless of cost.
    """
    if d < (p - r) * (q - r):
        return Method.NEWTON_V1
    if d * (p - r) * (q - r) <= (p * q - d) * (p + q - r) * r:
        return Method.NEWTON_V1
    return Method.NEWTON_V2


@dataclass(frozen=True)
class StoppingCriteria:
    """When to stop iterating.

    ``step_tol`` is absolute; ``None`` means ``1e-12 * ||M0||``. A value of 0
    disables the step test (then ``sigma_tol`` must be set).
    """

    step_tol: Optional[float] = None
    sigma_tol: Optional[float] = None
    max_iters: int = 100

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step_tol is not None and self.step_tol < 0:
            raise ValueError("step_tol must be non-negative")
        if self.step_tol == 0 and self.sigma_tol is None:
            raise ValueError("step_tol = 0 requires sigma_tol")

    def resolved_step_tol(self, m0_norm):
        return 1e-12 * m0_norm if self.step_tol is None else float(self.step_tol)


@dataclass
class SlraProblem:
    initial: np.ndarray
    structure: AffineStructure
    target_rank: int
    method: Method = Method.AUTO
    stopping: StoppingCriteria = field(default_factory=StoppingCriteria)
    gap_tol: float = DEFAULT_GAP_TOL

    def __post_init__(self):
        self.initial = as_matrix(self.initial, "initial")
        self.method = Method(self.method)
        p, q = self.structure.shape
        if self.initial.shape != (p, q):
            raise ValueError(f"initial has shape {self.initial.shape}, structure is {(p, q)}")
        if not 1 <= self.target_rank < min(p, q):
            raise ValueError(f"target rank must satisfy 1 <= r < {min(p, q)}")
        scale = max(np.linalg.norm(self.initial), 1.0)
        if self.structure.residual(self.initial) > MEMBERSHIP_TOL * scale:
            raise ValueError("initial matrix does not lie in the affine structure")

    def resolved_method(self):
        if self.method is Method.AUTO:
            p, q = self.structure.shape
            return choose_method(p, q, self.target_rank, self.structure.dim)
        return self.method


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    step_norm: float
    sigma_r_plus_1: float
    sigma_r: float
    distance_to_rank: float


@dataclass
class ConvergenceTrace:
    records: list = field(default_factory=list)
    termination: Termination = Termination.MAX_ITERS
    initial_norm: float = 1.0

    COLUMNS = ("iteration", "step_norm", "sigma_r_plus_1", "sigma_r", "distance_to_rank")

    def __len__(self):
        return len(self.records)

    @property
    def iterations(self):
        return len(self.records)

    @property
    def step_norms(self):
        return np.array([rec.step_norm for rec in self.records])

    def rows(self):
        return [[getattr(rec, c) for c in self.COLUMNS] for rec in self.records]

    def to_dict(self):
        return {
            "columns": list(self.COLUMNS),
            "rows": self.rows(),
            "termination": self.termination.value,
            "initial_norm": self.initial_norm,
        }


@dataclass
class SlraResult:
    final: np.ndarray
    trace: ConvergenceTrace
    residual_to_input: float
    method: Method

    @property
    def termination(self):
        return self.trace.termination

    @property
    def iterations(self):
        return self.trace.iterations

    def to_dict(self):
        return {
            "shape": list(self.final.shape),
            "final": self.final.ravel().tolist(),
            "method": self.method.value,
            "termination": self.trace.termination.value,
            "residual_to_input": self.residual_to_input,
            "trace": self.trace.to_dict(),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def solve(problem: SlraProblem) -> SlraResult:
    """Iterate the selected step from ``problem.initial`` until a stopping rule fires.

    Gap failures and divergence (a step longer than ``10 * ||M0||``) end the
    run with the corresponding termination; the last valid iterate is
    returned in both cases.
    """
    method = problem.resolved_method()
    step = _STEPS[method]
    structure = problem.structure
    r = problem.target_rank
    crit = problem.stopping
    m0 = problem.initial
    m0_norm = float(np.linalg.norm(m0))
    step_tol = crit.resolved_step_tol(m0_norm)
    diverge_at = DIVERGENCE_FACTOR * max(m0_norm, np.finfo(float).tiny)

    trace = ConvergenceTrace(initial_norm=m0_norm)
    m = m0
    termination = Termination.MAX_ITERS
    for it in range(1, crit.max_iters + 1):
        try:
            proj = project_rank(m, r, gap_tol=problem.gap_tol)
        except GapTooSmall:
            termination = Termination.GAP_FAILURE
            break
        if crit.sigma_tol is not None and proj.sigma_next < crit.sigma_tol:
            termination = Termination.SIGMA_CONVERGED
            break
        new = step(m, structure, r, proj=proj)
        step_norm = float(np.linalg.norm(new - m))
        if not math.isfinite(step_norm) or step_norm > diverge_at:
            trace.records.append(TraceRecord(it, step_norm, proj.sigma_next, proj.sigma_r, proj.distance))
            termination = Termination.DIVERGED
            break
        trace.records.append(TraceRecord(it, step_norm, proj.sigma_next, proj.sigma_r, proj.distance))
        m = new
        if step_norm < step_tol:
            termination = Termination.STEP_CONVERGED
            break
    else:
        if crit.sigma_tol is not None:
            try:
                if project_rank(m, r, gap_tol=0.0).sigma_next < crit.sigma_tol:
                    termination = Termination.SIGMA_CONVERGED
            except GapTooSmall:
                pass

    trace.termination = termination
    return SlraResult(
        final=m,
        trace=trace,
        residual_to_input=float(np.linalg.norm(m - m0)),
        method=method,
    )
