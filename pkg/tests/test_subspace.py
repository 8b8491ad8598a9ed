import json

import numpy as np
import pytest

from _oracles import random_structure
from slra.structures import HankelStructure, SylvesterStructure, completion_structure, CoordinateMask
from slra.subspace import AffineStructure, complement, from_generators, membership_residual, project_onto


def unit(p, q, i, j):
    e = np.zeros((p, q))
    e[i, j] = 1.0
    return e


def test_dependent_generator_dropped():
    s = from_generators(np.zeros((2, 2)), [unit(2, 2, 0, 0), 2 * unit(2, 2, 0, 0), unit(2, 2, 1, 1)])
    assert s.dim == 2


def test_symmetric_matrices():
    gens = [unit(2, 2, 0, 0), unit(2, 2, 1, 1), unit(2, 2, 0, 1) + unit(2, 2, 1, 0)]
    assert from_generators(np.zeros((2, 2)), gens).dim == 3


def test_sylvester_dimension():
    assert SylvesterStructure(10, 10, 5).structure.dim == 22


def test_constructor_checks(rng):
    with pytest.raises(ValueError):
        AffineStructure(np.zeros((2, 2)), 2 * unit(2, 2, 0, 0)[None])
    with pytest.raises(ValueError):
        AffineStructure(np.zeros((2, 2)), np.eye(4).reshape(4, 2, 2))
    with pytest.raises(ValueError):
        AffineStructure(np.zeros((2, 2)), np.zeros((1, 3, 3)))
    with pytest.raises(ValueError):
        from_generators(np.zeros((2, 2)), [np.zeros((2, 2))])


def test_complement_of_single_coordinate():
    s = from_generators(np.zeros((2, 2)), [unit(2, 2, 0, 0)])
    comp = complement(s).reshape(3, 4)
    assert comp.shape == (3, 4)
    np.testing.assert_allclose(comp @ comp.T, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(comp[:, 0], 0, atol=1e-12)


def test_complement_full_gram(rng):
    s, _, _ = random_structure(rng, 4, 4, 5)
    comp = s.complement()
    assert comp.shape == (11, 4, 4)
    allv = np.vstack([s.basis.reshape(5, 16), comp.reshape(11, 16)])
    np.testing.assert_allclose(allv @ allv.T, np.eye(16), atol=1e-10)
    assert s.complement() is comp


def test_completion_complement_fast_path():
    mask = CoordinateMask((3, 3), [(0, 0), (1, 2)], [1.0, 2.0])
    s = completion_structure(mask)
    assert s.complement().shape[0] == 2


def test_hankel_projection_2x2():
    hs = HankelStructure(2, 2).structure
    np.testing.assert_allclose(project_onto(hs, np.eye(2)), np.eye(2), atol=1e-15)
    x = np.array([[1.0, 2.0], [4.0, 5.0]])
    np.testing.assert_allclose(project_onto(hs, x), [[1, 3], [3, 5]], atol=1e-14)


def test_projection_idempotent_and_orthogonal(rng):
    s, base, gens = random_structure(rng, 4, 5, 7)
    x = rng.normal(size=(4, 5))
    px = s.project(x)
    np.testing.assert_allclose(s.project(px), px, atol=1e-12)
    np.testing.assert_allclose(s.basis.reshape(7, -1) @ (x - px).ravel(), 0, atol=1e-10)


def test_membership_residual(rng):
    s, base, gens = random_structure(rng, 3, 4, 5)
    x = base + 0.7 * gens[0] - gens[3]
    assert membership_residual(s, x) <= 1e-12 * np.linalg.norm(x)
    e1 = s.complement()[0]
    assert np.isclose(membership_residual(s, s.base + e1), 1.0)
    y = rng.normal(size=(3, 4))
    parseval = np.sqrt(np.sum((s.complement().reshape(-1, 12) @ (y - s.base).ravel()) ** 2))
    assert np.isclose(membership_residual(s, y), parseval, rtol=1e-10)


def test_coefficients_combine_round_trip(rng):
    s, _, _ = random_structure(rng, 3, 3, 4)
    c = rng.normal(size=4)
    np.testing.assert_allclose(s.coefficients(s.base + s.combine(c)), c, atol=1e-12)
    with pytest.raises(ValueError):
        s.combine(np.ones(3))
    with pytest.raises(ValueError):
        s.project(np.ones((3, 4)))


def test_json_round_trip(rng):
    s, _, _ = random_structure(rng, 3, 4, 5)
    t = AffineStructure.from_json(s.to_json())
    assert t.shape == s.shape and t.dim == s.dim
    x = rng.normal(size=(3, 4))
    np.testing.assert_allclose(t.project(x), s.project(x), atol=1e-12)
    assert json.loads(s.to_json())["shape"] == [3, 4]


def test_complement_thread_safe(rng):
    from concurrent.futures import ThreadPoolExecutor

    s, _, _ = random_structure(rng, 5, 5, 6)
    with ThreadPoolExecutor(4) as pool:
        outs = list(pool.map(lambda _: s.complement(), range(8)))
    assert all(o is outs[0] for o in outs)
