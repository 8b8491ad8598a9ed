"""Structure adapters: Sylvester (approximate GCD), coordinate masks
(matrix completion) and Hankel matrices (denoising).

Polynomial coefficients are stored in ascending order ``c_0, ..., c_deg``.
The Sylvester matrix is filled leading-coefficient first, so the adapter
flips the order on the way in and out.

Extraction from a matrix uses the orthogonal-projection coordinates of the
matrix in the structure basis: for these structures that is the average of
the entries carrying each parameter. It is computed as ``x0 + mean(x - x0)``
so that a matrix which already belongs to the structure gives back its
parameters bit for bit.
"""

import json
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix, svd
from .subspace import AffineStructure, from_generators

__all__ = [
    "PolyPair",
    "CoordinateMask",
    "HankelSpec",
    "sylvester_matrix",
    "SylvesterStructure",
    "sylvester_structure",
    "gcd_degree",
    "gcd_cofactors",
    "completion_structure",
    "HankelStructure",
    "hankel_structure",
]


def _group_mean(x, groups):
    """Per-group mean of ``x.ravel()`` where ``groups`` lists flat indices."""
    flat = x.ravel()
    out = np.empty(len(groups))
    for k, idx in enumerate(groups):
        vals = flat[idx]
        out[k] = vals[0] + np.mean(vals - vals[0])
    return out


# -- approximate GCD --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PolyPair:
    """Two univariate polynomials with ascending coefficient vectors."""

    f: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        f = np.array(self.f, dtype=float).ravel()
        g = np.array(self.g, dtype=float).ravel()
        if f.size < 1 or g.size < 1:
            raise ValueError("polynomials need at least one coefficient")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
            raise ValueError("non-finite polynomial coefficients")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)

    @property
    def m(self):
        return self.f.size - 1

    @property
    def n(self):
        return self.g.size - 1

    def norm(self):
        """``sqrt(||f||^2 + ||g||^2)``."""
        return float(np.sqrt(self.f @ self.f + self.g @ self.g))

    def distance(self, other):
        if (self.m, self.n) != (other.m, other.n):
            raise ValueError("degree mismatch")
        return PolyPair(self.f - other.f, self.g - other.g).norm()

    def scaled(self, factor):
        return PolyPair(self.f * factor, self.g * factor)

    def __eq__(self, other):
        if not isinstance(other, PolyPair):
            return NotImplemented
        return np.array_equal(self.f, other.f) and np.array_equal(self.g, other.g)

    def to_text(self):
        """Two lines, one per polynomial: the degree followed by ascending coefficients."""
        lines = []
        for c in (self.f, self.g):
            lines.append(" ".join([str(c.size - 1)] + [repr(float(v)) for v in c]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if len(lines) != 2:
            raise ValueError(f"expected two non-empty lines, got {len(lines)}")
        polys = []
        for tokens in lines:
            deg = int(tokens[0])
            coeffs = [float(t) for t in tokens[1:]]
            if len(coeffs) != deg + 1:
                raise ValueError(f"degree {deg} needs {deg + 1} coefficients, got {len(coeffs)}")
            polys.append(coeffs)
        return cls(*polys)


def _check_gcd_degree(m, n, d):
    if m < 1 or n < 1:
        raise ValueError("polynomial degrees must be at least 1")
    if not 1 <= d <= min(m, n):
        raise ValueError(f"gcd degree must satisfy 1 <= d <= min(m, n) = {min(m, n)}, got {d}")


def sylvester_matrix(pair, d_gcd):
    """The ``d``-th Sylvester (subresultant) matrix of ``(f, g)``.

    Shape ``(m+n-d+1, (n-d+1) + (m-d+1))``. Column ``k`` of the first block
    holds ``f_m, ..., f_0`` starting at row ``k``; the second block does the
    same for ``g``.
    """
    m, n, d = pair.m, pair.n, int(d_gcd)
    _check_gcd_degree(m, n, d)
    rows = m + n - d + 1
    nf, ng = n - d + 1, m - d + 1
    out = np.zeros((rows, nf + ng))
    fdesc, gdesc = pair.f[::-1], pair.g[::-1]
    for k in range(nf):
        out[k:k + m + 1, k] = fdesc
    for k in range(ng):
        out[k:k + n + 1, nf + k] = gdesc
    return out


class SylvesterStructure:
    """The image of ``R[x]_m x R[x]_n`` under the ``d``-th Sylvester map.

    Attributes
    ----------
    structure : AffineStructure
        Linear (base 0) subspace of dimension ``m + n + 2``.
    rank : int
        ``m + n - 2d + 1``, the rank characterising a gcd of degree ``d``.
    """

    def __init__(self, m, n, d_gcd):
        _check_gcd_degree(m, n, d_gcd)
        self.m, self.n, self.d_gcd = int(m), int(n), int(d_gcd)
        self.shape = (m + n - d_gcd + 1, m + n - 2 * d_gcd + 2)
        self.rank = m + n - 2 * d_gcd + 1
        generators = []
        self._groups = []
        for which in range(m + n + 2):
            f = np.zeros(m + 1)
            g = np.zeros(n + 1)
            if which <= m:
                f[which] = 1.0
            else:
                g[which - m - 1] = 1.0
            img = sylvester_matrix(PolyPair(f, g), d_gcd)
            generators.append(img)
            self._groups.append(np.flatnonzero(img.ravel()))
        self.structure = from_generators(np.zeros(self.shape), generators)
        assert self.structure.dim == m + n + 2

    def embed(self, pair):
        if (pair.m, pair.n) != (self.m, self.n):
            raise ValueError(f"expected degrees ({self.m}, {self.n}), got ({pair.m}, {pair.n})")
        return sylvester_matrix(pair, self.d_gcd)

    def extract(self, matrix):
        """Polynomial pair whose Sylvester matrix is the projection of `matrix`."""
        x = as_matrix(matrix)
        if x.shape != self.shape:
            raise ValueError(f"shape mismatch: expected {self.shape}, got {x.shape}")
        c = _group_mean(x, self._groups)
        return PolyPair(c[: self.m + 1], c[self.m + 1:])


def sylvester_structure(m, n, d_gcd):
    return SylvesterStructure(m, n, d_gcd)


def gcd_degree(pair, threshold=1e-8):
    """Numerical gcd degree via the Sylvester rank criterion.

    Returns the largest ``d`` for which ``sigma_min / sigma_1`` of the
    ``d``-th Sylvester matrix is below `threshold` (``0`` if none). Assumes
    the leading coefficients are non-zero.
    """
    for d in range(min(pair.m, pair.n), 0, -1):
        s = svd(sylvester_matrix(pair, d)).S
        if s[-1] < threshold * s[0]:
            return d
    return 0


def _conv_matrix(c, ncols):
    """Matrix of ``x -> c * x`` on ascending coefficient vectors of length `ncols`."""
    out = np.zeros((c.size + ncols - 1, ncols))
    for k in range(ncols):
        out[k:k + c.size, k] = c
    return out


def gcd_cofactors(pair, d_gcd):
    """Approximate ``(h, f1, g1)`` with ``f ~ h f1`` and ``g ~ h g1``, ``deg h = d``.

    The cofactors come from the right singular vector of the smallest
    singular value of the Sylvester matrix; ``h`` is then the least-squares
    common divisor.
    """
    m, n, d = pair.m, pair.n, int(d_gcd)
    mat = sylvester_matrix(pair, d)
    null = svd(mat).V[:, -1]
    nf = n - d + 1
    g1 = null[:nf][::-1]
    f1 = -null[nf:][::-1]
    lhs = np.vstack([_conv_matrix(f1, d + 1), _conv_matrix(g1, d + 1)])
    rhs = np.concatenate([pair.f, pair.g])
    h, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return h, f1, g1


# -- matrix completion --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoordinateMask:
    """Observed entries of a ``p x q`` matrix (0-based indices)."""

    shape: tuple
    observed: tuple
    values: np.ndarray

    def __post_init__(self):
        p, q = (int(s) for s in self.shape)
        obs = tuple((int(i), int(j)) for i, j in self.observed)
        vals = np.array(self.values, dtype=float).ravel()
        if len(obs) != vals.size:
            raise ValueError("observed and values differ in length")
        if len(set(obs)) != len(obs):
            raise ValueError("duplicate observed index")
        for i, j in obs:
            if not (0 <= i < p and 0 <= j < q):
                raise ValueError(f"index {(i, j)} out of range for shape {(p, q)}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite observed values")
        object.__setattr__(self, "shape", (p, q))
        object.__setattr__(self, "observed", obs)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_matrix(cls, matrix, observed):
        matrix = as_matrix(matrix)
        observed = [tuple(ix) for ix in observed]
        values = [matrix[i, j] for i, j in observed]
        return cls(matrix.shape, observed, values)

    def indicator(self):
        out = np.zeros(self.shape, dtype=bool)
        for i, j in self.observed:
            out[i, j] = True
        return out

    def to_dict(self):
        return {
            "shape": list(self.shape),
            "observed": [list(ix) for ix in self.observed],
            "values": self.values.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(data["shape"]), [tuple(ix) for ix in data["observed"]], data["values"])

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _coordinate_stack(shape, flat_indices):
    p, q = shape
    out = np.zeros((len(flat_indices), p * q))
    out[np.arange(len(flat_indices)), flat_indices] = 1.0
    return out.reshape(-1, p, q)


def completion_structure(mask):
    """Matrices agreeing with `mask` on its observed entries.

    The base point carries the observed values and zeros elsewhere. Basis
    and complement are coordinate matrices (free and fixed entries, row-major).
    """
    p, q = mask.shape
    fixed = mask.indicator().ravel()
    free_idx = np.flatnonzero(~fixed)
    if free_idx.size == 0:
        raise ValueError("mask observes every entry; nothing to complete")
    base = np.zeros((p, q))
    for (i, j), v in zip(mask.observed, mask.values):
        base[i, j] = v
    return AffineStructure(
        base,
        _coordinate_stack((p, q), free_idx),
        complement_basis=_coordinate_stack((p, q), np.flatnonzero(fixed)),
        check=False,
    )


# -- Hankel ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HankelSpec:
    """``p x q`` Hankel matrix ``H[i, j] = values[i + j]`` (0-based)."""

    shape: tuple
    values: np.ndarray

    def __post_init__(self):
        p, q = (int(s) for s in self.shape)
        vals = np.array(self.values, dtype=float).ravel()
        if p < 1 or q < 1:
            raise ValueError("shape entries must be positive")
        if vals.size != p + q - 1:
            raise ValueError(f"need {p + q - 1} antidiagonal values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite Hankel values")
        object.__setattr__(self, "shape", (p, q))
        object.__setattr__(self, "values", vals)

    def matrix(self):
        p, q = self.shape
        i, j = np.indices((p, q))
        return self.values[i + j]

    def __eq__(self, other):
        if not isinstance(other, HankelSpec):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.values, other.values)

    def to_dict(self):
        return {"shape": list(self.shape), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(data["shape"]), data["values"])

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


class HankelStructure:
    """Linear subspace of ``p x q`` Hankel matrices, one basis element per antidiagonal."""

    def __init__(self, p, q):
        if p < 1 or q < 1:
            raise ValueError("shape entries must be positive")
        self.shape = (int(p), int(q))
        i, j = np.indices(self.shape)
        anti = (i + j).ravel()
        self._groups = [np.flatnonzero(anti == k) for k in range(p + q - 1)]
        basis = np.zeros((p + q - 1, p * q))
        for k, idx in enumerate(self._groups):
            basis[k, idx] = 1.0 / np.sqrt(idx.size)
        self.structure = AffineStructure(np.zeros(self.shape), basis.reshape(-1, p, q))

    def embed(self, spec):
        if spec.shape != self.shape:
            raise ValueError(f"expected shape {self.shape}, got {spec.shape}")
        return spec.matrix()

    def extract(self, matrix):
        """Antidiagonal averages of `matrix` (its Frobenius-nearest Hankel matrix)."""
        x = as_matrix(matrix)
        if x.shape != self.shape:
            raise ValueError(f"shape mismatch: expected {self.shape}, got {x.shape}")
        return HankelSpec(self.shape, _group_mean(x, self._groups))


def hankel_structure(p, q):
    return HankelStructure(p, q)
