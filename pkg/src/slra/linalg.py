"""Dense real linear algebra used throughout the package.

Matrices are plain 2-D ``float64`` NumPy arrays. Every public function
checks that its inputs are finite before doing any work.
"""

from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "SvdFactors",
    "SvdConvergenceError",
    "as_matrix",
    "frobenius_inner",
    "rank_one_inner",
    "svd",
    "min_norm_solve",
    "gram_schmidt",
]

EPS = np.finfo(float).eps


class SvdConvergenceError(ArithmeticError):
    """The LAPACK SVD driver failed to converge."""


class SvdFactors(NamedTuple):
    """Full SVD ``m = U @ diag(S) @ V.T`` with square orthogonal ``U`` and ``V``."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray


def as_matrix(m, name="matrix"):
    """Return `m` as a finite 2-D float array, raising ``ValueError`` otherwise."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")


def frobenius_inner(a, b):
    """Frobenius inner product ``trace(a @ b.T)``."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    _check_same_shape(a, b)
    return float(np.vdot(a, b))


def rank_one_inner(u, v, x):
    """Compute ``<u v^T, x> = u^T x v`` without forming the outer product."""
    x = as_matrix(x, "x")
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape[0] != x.shape[0] or v.shape[0] != x.shape[1]:
        raise ValueError(
            f"dimension mismatch: u has {u.shape[0]}, v has {v.shape[0]}, x is {x.shape}"
        )
    return float(u @ x @ v)


def svd(m):
    """Full singular value decomposition.

    Returns ``SvdFactors(U, S, V)`` with ``U`` of shape (p, p), ``V`` of shape
    (q, q) and ``S`` the ``min(p, q)`` singular values in non-increasing order.
    Note that ``V`` is returned, not ``V.T``.

    Raises
    ------
    SvdConvergenceError
        If LAPACK does not converge.
    """
    m = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(str(exc)) from exc
    return SvdFactors(u, s, vt.T)


def min_norm_solve(a, b, rank_tol=None):
    """Minimum-norm least-squares solution ``x = pinv(a) @ b``.

    Parameters
    ----------
    a : (k, n) array
    b : (k,) array
    rank_tol : float, optional
        Singular values of `a` below ``rank_tol * sigma_1`` are treated as
        zero. Defaults to ``max(k, n) * eps``.

    Returns
    -------
    x : (n,) array
        The minimiser of ``||a x - b||`` with the smallest 2-norm. On a
        consistent system this is the minimum-norm exact solution.
    """
    a = as_matrix(a, "a")
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.shape[0] != a.shape[0]:
        raise ValueError(f"b must have length {a.shape[0]}, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError("b has non-finite entries")
    if rank_tol is None:
        rank_tol = max(a.shape) * EPS
    # gelsd: SVD-based, zeroes singular values below rcond * sigma_1
    x, *_ = np.linalg.lstsq(a, b, rcond=rank_tol)
    return x


def gram_schmidt(vectors: Sequence[np.ndarray], tol: float = 1e-10) -> list:
    """Orthonormalise a family of equally shaped arrays.

    Modified Gram-Schmidt with a second (re-orthogonalisation) sweep. A vector
    whose residual norm falls below ``tol * max_norm`` (``max_norm`` being the
    largest input norm) is considered dependent and dropped, so the output
    count is the numerical rank of the family.
    """
    if len(vectors) == 0:
        return []
    shape = np.shape(vectors[0])
    flat = []
    for v in vectors:
        a = np.asarray(v, dtype=float)
        if a.shape != shape:
            raise ValueError(f"all vectors must share shape {shape}, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite entries in gram_schmidt input")
        flat.append(a.ravel())
    max_norm = max(np.linalg.norm(w) for w in flat)
    if max_norm == 0.0:
        return []
    cutoff = tol * max_norm
    basis: list[np.ndarray] = []
    for w in flat:
        w = w.copy()
        for _ in range(2):
            for q in basis:
                w -= (q @ w) * q
        nrm = np.linalg.norm(w)
        if nrm < cutoff:
            continue
        basis.append(w / nrm)
    return [q.reshape(shape) for q in basis]
