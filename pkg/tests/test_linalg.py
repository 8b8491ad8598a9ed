import numpy as np
import pytest

from slra.linalg import (
    SvdConvergenceError,
    as_matrix,
    frobenius_inner,
    gram_schmidt,
    min_norm_solve,
    rank_one_inner,
    svd,
)


def test_as_matrix_rejects_bad_input():
    with pytest.raises(ValueError):
        as_matrix(np.zeros(3))
    with pytest.raises(ValueError):
        as_matrix(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        as_matrix(np.array([[1.0, np.nan]]))


def test_frobenius_inner_is_trace(rng):
    a, b = rng.normal(size=(2, 4, 3))
    assert np.isclose(frobenius_inner(a, b), np.trace(a @ b.T))
    with pytest.raises(ValueError):
        frobenius_inner(a, b.T)


def test_rank_one_inner_matches_outer(rng):
    u, v, x = rng.normal(size=4), rng.normal(size=3), rng.normal(size=(4, 3))
    assert np.isclose(rank_one_inner(u, v, x), frobenius_inner(np.outer(u, v), x))


def test_svd_full_and_sorted(rng):
    m = rng.normal(size=(5, 3))
    u, s, v = svd(m)
    assert u.shape == (5, 5) and v.shape == (3, 3)
    assert np.all(np.diff(s) <= 0)
    sm = np.zeros((5, 3))
    sm[:3, :3] = np.diag(s)
    np.testing.assert_allclose(u @ sm @ v.T, m, atol=1e-13)


def test_svd_error_type():
    assert issubclass(SvdConvergenceError, ArithmeticError)


def test_min_norm_solve_matches_pinv(rng):
    a = rng.normal(size=(3, 6))
    b = rng.normal(size=3)
    np.testing.assert_allclose(min_norm_solve(a, b), np.linalg.pinv(a) @ b, atol=1e-12)


def test_min_norm_solve_rank_deficient(rng):
    col = rng.normal(size=(4, 1))
    a = np.hstack([col, 2 * col])
    b = col[:, 0]
    x = min_norm_solve(a, b)
    # minimal solution of x1 + 2 x2 = 1 is (1, 2) / 5
    np.testing.assert_allclose(x, [0.2, 0.4], atol=1e-12)


def test_min_norm_solve_shape_check(rng):
    with pytest.raises(ValueError):
        min_norm_solve(rng.normal(size=(3, 2)), np.ones(2))


def test_gram_schmidt_drops_dependent(rng):
    a, b = rng.normal(size=(2, 3, 3))
    out = gram_schmidt([a, b, a + 2 * b, np.zeros((3, 3))])
    assert len(out) == 2
    flat = np.stack(out).reshape(2, -1)
    np.testing.assert_allclose(flat @ flat.T, np.eye(2), atol=1e-14)


def test_gram_schmidt_empty():
    assert gram_schmidt([]) == []
