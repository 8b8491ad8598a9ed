"""Geometry of the variety of rank-``r`` matrices at an SVD-truncated point.

The normal space at ``Mt = U_r S_r V_r^T`` is spanned by the outer products
``ut_i vt_j^T`` of trailing singular vectors, enumerated row-major in
``(i, j)``. The tangent space is spanned by ``u_i v_j^T`` with ``i <= r`` or
``j <= r``. The fixed tangent enumeration used here is

1. all pairs with ``i <= r``, row-major: ``(1, 1), (1, 2), ..., (r, q)``;
2. then pairs with ``i > r`` and ``j <= r``, row-major: ``(r+1, 1), ..., (p, r)``.

None of these rank-one matrices is ever formed; coordinates are read off
``U^T X V``.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import SvdFactors, as_matrix, svd

__all__ = [
    "GapTooSmall",
    "RankProjection",
    "project_rank",
    "normal_inner",
    "tangent_inner",
    "tangent_combine",
    "DEFAULT_GAP_TOL",
]

DEFAULT_GAP_TOL = 1e-12


class GapTooSmall(ArithmeticError):
    """``sigma_r - sigma_{r+1}`` is too small for the rank projection to be unique."""

    def __init__(self, sigma_r, sigma_r1, sigma_1):
        self.sigma_r = sigma_r
        self.sigma_r1 = sigma_r1
        self.sigma_1 = sigma_1
        super().__init__(
            f"singular value gap too small: sigma_r={sigma_r:.3e}, "
            f"sigma_r+1={sigma_r1:.3e}, sigma_1={sigma_1:.3e}"
        )


@dataclass(frozen=True, eq=False)
class RankProjection:
    """Nearest rank-``r`` matrix together with the SVD factors around it."""

    target_rank: int
    truncated: np.ndarray
    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray

    @property
    def shape(self):
        return self.truncated.shape

    @property
    def left_range(self):
        return self.U[:, : self.target_rank]

    @property
    def right_range(self):
        return self.V[:, : self.target_rank]

    @property
    def left_null(self):
        """Last ``p - r`` left singular vectors, a basis of ``Ker(Mt^T)``."""
        return self.U[:, self.target_rank:]

    @property
    def right_null(self):
        """Last ``q - r`` right singular vectors, a basis of ``Ker(Mt)``."""
        return self.V[:, self.target_rank:]

    @property
    def sigma_r(self):
        return float(self.sigma[self.target_rank - 1])

    @property
    def sigma_next(self):
        """``sigma_{r+1}`` of the projected matrix (the first discarded value)."""
        return float(self.sigma[self.target_rank])

    @property
    def gap(self):
        return self.sigma_r - self.sigma_next

    @property
    def distance(self):
        """``||M - Mt||``, the root-sum-square of the discarded singular values."""
        return float(np.sqrt(np.sum(self.sigma[self.target_rank:] ** 2)))

    @property
    def normal_dim(self):
        p, q = self.shape
        r = self.target_rank
        return (p - r) * (q - r)

    @property
    def tangent_dim(self):
        p, q = self.shape
        r = self.target_rank
        return (p + q - r) * r


def project_rank(m, r, gap_tol=DEFAULT_GAP_TOL, factors=None):
    """Eckart-Young projection of `m` onto matrices of rank ``r``.

    Parameters
    ----------
    m : (p, q) array
    r : int
        Target rank, ``1 <= r < min(p, q)``.
    gap_tol : float
        Raise :class:`GapTooSmall` when ``sigma_r - sigma_{r+1} <= gap_tol * sigma_1``.
    factors : SvdFactors, optional
        Precomputed full SVD of `m` (any sign convention).
    """
    m = as_matrix(m)
    p, q = m.shape
    r = int(r)
    if not 1 <= r < min(p, q):
        raise ValueError(f"rank must satisfy 1 <= r < min(p, q) = {min(p, q)}, got {r}")
    if factors is None:
        factors = svd(m)
    u, s, v = factors
    if s[r - 1] - s[r] <= gap_tol * s[0]:
        raise GapTooSmall(float(s[r - 1]), float(s[r]), float(s[0]))
    truncated = (u[:, :r] * s[:r]) @ v[:, :r].T
    return RankProjection(r, truncated, u, v, s)


def _check_stack(proj, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-2:] != proj.shape:
        raise ValueError(f"shape mismatch: expected (..., {proj.shape[0]}, {proj.shape[1]}), got {x.shape}")
    return x


def normal_inner(proj, x):
    """Coordinates of `x` against the normal family ``ut_i vt_j^T``.

    `x` may be a single ``(p, q)`` matrix or a stack ``(k, p, q)``; the result
    has trailing length ``(p - r) * (q - r)``, index ``(i - 1)(q - r) + j``.
    """
    x = _check_stack(proj, x)
    c = proj.left_null.T @ x @ proj.right_null
    return c.reshape(*x.shape[:-2], -1)


def tangent_inner(proj, x):
    """Coordinates of `x` against the tangent family, in the module's fixed order.

    Accepts a single matrix or a ``(k, p, q)`` stack; the trailing length is
    ``(p + q - r) * r``.
    """
    x = _check_stack(proj, x)
    r = proj.target_rank
    c = proj.U.T @ x @ proj.V
    lead = x.shape[:-2]
    top = c[..., :r, :].reshape(*lead, -1)
    left = c[..., r:, :r].reshape(*lead, -1)
    return np.concatenate([top, left], axis=-1)


def tangent_combine(proj, coeffs):
    """Assemble ``sum_l coeffs_l T_l`` as ``U C V^T`` (inverse of :func:`tangent_inner`)."""
    coeffs = np.asarray(coeffs, dtype=float)
    p, q = proj.shape
    r = proj.target_rank
    if coeffs.shape != (proj.tangent_dim,):
        raise ValueError(f"expected {proj.tangent_dim} coefficients, got shape {coeffs.shape}")
    c = np.zeros((p, q))
    c[:r, :] = coeffs[: r * q].reshape(r, q)
    c[r:, :r] = coeffs[r * q:].reshape(p - r, r)
    # only the first r rows/cols of C are non-zero
    return proj.U[:, :r] @ c[:r, :] @ proj.V.T + proj.U[:, r:] @ c[r:, :r] @ proj.V[:, :r].T


def flip_signs(factors: SvdFactors, flips) -> SvdFactors:
    """Negate paired columns ``(u_i, v_i)``; ``flips`` is a boolean mask over ``min(p, q)``.

    Any such flip is another valid SVD of the same matrix.
    """
    u, s, v = (np.array(a, copy=True) for a in factors)
    flips = np.asarray(flips, dtype=bool)
    k = s.shape[0]
    if flips.shape != (k,):
        raise ValueError(f"flips must have length {k}")
    idx = np.flatnonzero(flips)
    u[:, idx] *= -1
    v[:, idx] *= -1
    return SvdFactors(u, s, v)
