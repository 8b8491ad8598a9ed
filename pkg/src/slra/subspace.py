"""Affine matrix subspaces ``E = base + span(E_1, ..., E_d)``."""

import json
import threading

import numpy as np

from .linalg import as_matrix, gram_schmidt

__all__ = ["AffineStructure", "from_generators", "complement", "project_onto", "membership_residual"]

_ORTH_TOL = 1e-10


def _orthonormality_error(flat):
    if flat.shape[0] == 0:
        return 0.0
    gram = flat @ flat.T
    return float(np.max(np.abs(gram - np.eye(flat.shape[0]))))


class AffineStructure:
    """An affine subspace of ``p x q`` real matrices.

    Parameters
    ----------
    base : (p, q) array
        Any point of the subspace.
    basis : (d, p, q) array
        Orthonormal basis of the direction space ``E0`` (checked).
    complement_basis : (p*q - d, p, q) array, optional
        Orthonormal basis of the orthogonal complement of ``E0``. Built on
        first use by :meth:`complement` when not supplied.
    check : bool
        Verify orthonormality. Adapters that build exact coordinate bases
        pass ``False``.
    """

    def __init__(self, base, basis, complement_basis=None, check=True):
        base = as_matrix(base, "base")
        basis = np.asarray(basis, dtype=float)
        p, q = base.shape
        if basis.ndim != 3 or basis.shape[1:] != (p, q):
            raise ValueError(f"basis must have shape (d, {p}, {q}), got {basis.shape}")
        d = basis.shape[0]
        if not 1 <= d < p * q:
            raise ValueError(f"need 1 <= d < p*q = {p * q}, got d = {d}")
        flat = basis.reshape(d, p * q)
        if check and _orthonormality_error(flat) > _ORTH_TOL:
            raise ValueError("basis is not orthonormal")
        self.shape = (p, q)
        self.base = base
        self.basis = basis
        self._flat = flat
        self._complement = None
        self._lock = threading.Lock()
        if complement_basis is not None:
            comp = np.asarray(complement_basis, dtype=float)
            if comp.shape != (p * q - d, p, q):
                raise ValueError(
                    f"complement basis must have shape ({p * q - d}, {p}, {q}), got {comp.shape}"
                )
            cflat = comp.reshape(-1, p * q)
            if check and (
                _orthonormality_error(cflat) > _ORTH_TOL
                or (cflat.size and np.max(np.abs(cflat @ flat.T)) > _ORTH_TOL)
            ):
                raise ValueError("complement basis is not an orthonormal complement of the basis")
            self._complement = comp

    @property
    def dim(self):
        """Dimension ``d`` of the direction space."""
        return self.basis.shape[0]

    @property
    def codim(self):
        return self.shape[0] * self.shape[1] - self.dim

    def __repr__(self):
        return f"AffineStructure(shape={self.shape}, d={self.dim})"

    def coefficients(self, x):
        """Coordinates ``<x - base, E_i>`` of `x` in the basis."""
        x = self._check(x)
        return self._flat @ (x - self.base).ravel()

    def combine(self, coeffs):
        """Return ``sum_i coeffs_i E_i`` (a direction, without the base point)."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coefficients, got shape {coeffs.shape}")
        return (coeffs @ self._flat).reshape(self.shape)

    def project(self, x):
        """Orthogonal projection of `x` onto the affine subspace."""
        return self.base + self.combine(self.coefficients(x))

    def residual(self, x):
        """Distance from `x` to the subspace."""
        return float(np.linalg.norm(x - self.project(x)))

    def complement(self):
        """Orthonormal basis of the orthogonal complement, shape ``(pq - d, p, q)``.

        Computed once from a complete QR factorisation of the basis and cached.
        """
        if self._complement is None:
            with self._lock:
                if self._complement is None:
                    p, q = self.shape
                    qmat, _ = np.linalg.qr(self._flat.T, mode="complete")
                    comp = qmat[:, self.dim:].T
                    # one projection sweep against the basis keeps the two
                    # families orthogonal to working precision
                    comp = comp - (comp @ self._flat.T) @ self._flat
                    qc, _ = np.linalg.qr(comp.T)
                    self._complement = np.ascontiguousarray(qc.T).reshape(-1, p, q)
        return self._complement

    def _check(self, x):
        x = as_matrix(x, "x")
        if x.shape != self.shape:
            raise ValueError(f"shape mismatch: expected {self.shape}, got {x.shape}")
        return x

    # -- serialisation ----------------------------------------------------

    def to_dict(self):
        """JSON-ready description ``{shape, base, generators}`` (row-major flat lists)."""
        return {
            "shape": list(self.shape),
            "base": self.base.ravel().tolist(),
            "generators": [e.ravel().tolist() for e in self.basis],
        }

    @classmethod
    def from_dict(cls, data):
        shape = tuple(int(s) for s in data["shape"])
        if len(shape) != 2:
            raise ValueError("shape must have two entries")
        base = np.asarray(data["base"], dtype=float).reshape(shape)
        gens = [np.asarray(g, dtype=float).reshape(shape) for g in data["generators"]]
        return from_generators(base, gens)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def from_generators(base, generators, tol=_ORTH_TOL):
    """Build an :class:`AffineStructure` from raw (possibly dependent) generators.

    Generators are orthonormalised with :func:`~slra.linalg.gram_schmidt`;
    dependent ones are dropped.
    """
    base = as_matrix(base, "base")
    for g in generators:
        if np.shape(g) != base.shape:
            raise ValueError(f"generator shape {np.shape(g)} does not match base {base.shape}")
    basis = gram_schmidt(generators, tol=tol)
    if not basis:
        raise ValueError("generators span the zero subspace")
    return AffineStructure(base, np.stack(basis))


def complement(structure):
    return structure.complement()


def project_onto(structure, x):
    return structure.project(x)


def membership_residual(structure, x):
    return structure.residual(x)
