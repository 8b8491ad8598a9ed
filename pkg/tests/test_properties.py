"""Randomised invariants. Shapes and seeds are drawn by hypothesis; matrix
entries come from a seeded NumPy generator so each example is cheap."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from _oracles import kkt_newton_step, random_feasible_tangent_point, random_structure, transversal_instance
from slra.harness import gen_hankel, rate_estimate
from slra.linalg import frobenius_inner, gram_schmidt, min_norm_solve, rank_one_inner, svd
from slra.manifold import GapTooSmall, normal_inner, project_rank, tangent_combine, tangent_inner
from slra.solver import SlraProblem, StoppingCriteria, solve, step_cadzow, step_newton_v1, step_newton_v2
from slra.structures import HankelStructure, PolyPair, SylvesterStructure, sylvester_matrix

MANY = settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
SOME = settings(max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])

seeds = st.integers(0, 2 ** 32 - 1)
dims = st.integers(1, 7)


def gen(seed):
    return np.random.default_rng(seed)


# -- linalg -----------------------------------------------------------------


@MANY
@given(seeds, dims, dims)
def test_frobenius_symmetric_and_norm(seed, p, q):
    a, b = gen(seed).normal(size=(2, p, q))
    assert frobenius_inner(a, b) == frobenius_inner(b, a)
    assert np.isclose(frobenius_inner(a, a), np.linalg.norm(a) ** 2, rtol=1e-12)
    u, v = gen(seed + 1).normal(size=p), gen(seed + 2).normal(size=q)
    assert np.isclose(rank_one_inner(u, v, a), frobenius_inner(np.outer(u, v), a), rtol=1e-10, atol=1e-12)


@MANY
@given(seeds, dims, dims)
def test_svd_identities(seed, p, q):
    m = gen(seed).normal(size=(p, q))
    u, s, v = svd(m)
    assert np.max(np.abs(u.T @ u - np.eye(p))) <= 1e-12 * p
    assert np.max(np.abs(v.T @ v - np.eye(q))) <= 1e-12 * q
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    k = min(p, q)
    assert np.linalg.norm((u[:, :k] * s) @ v[:, :k].T - m) <= 1e-12 * np.linalg.norm(m)


@MANY
@given(seeds, st.integers(1, 6), st.integers(1, 8))
def test_min_norm_solve_consistent(seed, k, n):
    rng = gen(seed)
    a = rng.normal(size=(k, n))
    b = a @ rng.normal(size=n)
    x = min_norm_solve(a, b)
    assert np.linalg.norm(a @ x - b) <= 1e-10 * max(np.linalg.norm(b), 1e-300) + 1e-14
    _, s, vt = np.linalg.svd(a)
    rank = int(np.sum(s > 1e-12 * s[0]))
    null = vt[rank:].T
    if null.size:
        y = x + null @ rng.normal(size=null.shape[1])
        assert np.linalg.norm(x) <= np.linalg.norm(y) + 1e-12


@MANY
@given(seeds, st.integers(1, 8), dims, dims)
def test_gram_schmidt_orthonormal(seed, count, p, q):
    vecs = list(gen(seed).normal(size=(count, p, q)))
    out = gram_schmidt(vecs)
    assert len(out) == min(count, p * q)
    flat = np.stack(out).reshape(len(out), -1)
    assert np.max(np.abs(flat @ flat.T - np.eye(len(out)))) <= 1e-10


# -- subspace ------------------------------------------------------------------


def _structure(seed, p, q):
    rng = gen(seed)
    d = int(rng.integers(1, p * q))
    return rng, random_structure(rng, p, q, d)


@MANY
@given(seeds, st.integers(1, 5), st.integers(2, 5))
def test_projection_properties(seed, p, q):
    rng, (s, base, gens) = _structure(seed, p, q)
    x, y = rng.normal(size=(2, p, q))
    px, py = s.project(x), s.project(y)
    assert np.linalg.norm(s.project(px) - px) <= 1e-10 * max(1.0, np.linalg.norm(px))
    assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) * (1 + 1e-12)
    assert np.max(np.abs(s.basis.reshape(s.dim, -1) @ (x - px).ravel())) <= 1e-10


@MANY
@given(seeds, st.integers(1, 5), st.integers(2, 5))
def test_basis_and_complement_span_everything(seed, p, q):
    _, (s, _, _) = _structure(seed, p, q)
    allv = np.vstack([s.basis.reshape(s.dim, -1), s.complement().reshape(s.codim, -1)])
    assert np.max(np.abs(allv @ allv.T - np.eye(p * q))) <= 1e-9


# -- manifold ------------------------------------------------------------------


def _proj(seed, p, q):
    rng = gen(seed)
    r = int(rng.integers(1, min(p, q)))
    m = rng.normal(size=(p, q))
    return rng, m, project_rank(m, r)


@MANY
@given(seeds, st.integers(2, 7), st.integers(2, 7))
def test_projection_geometry(seed, p, q):
    rng, m, proj = _proj(seed, p, q)
    r = proj.target_rank
    s = np.linalg.svd(proj.truncated, compute_uv=False)
    assert s[r] <= 1e-10 * s[0]
    assert np.isclose(np.linalg.norm(m - proj.truncated) ** 2, np.sum(proj.sigma[r:] ** 2), rtol=1e-10)
    x = rng.normal(size=(p, q))
    total = np.sum(tangent_inner(proj, x) ** 2) + np.sum(normal_inner(proj, x) ** 2)
    assert np.isclose(total, np.sum(x ** 2), rtol=1e-10)


@MANY
@given(seeds, st.integers(2, 7), st.integers(2, 7))
def test_tangent_family_has_no_normal_part(seed, p, q):
    rng, m, proj = _proj(seed, p, q)
    c = rng.normal(size=proj.tangent_dim)
    t = tangent_combine(proj, c)
    assert np.max(np.abs(normal_inner(proj, t))) <= 1e-10 * max(1.0, np.linalg.norm(c))
    assert np.allclose(tangent_inner(proj, t), c, atol=1e-10 * max(1.0, np.linalg.norm(c)))


@MANY
@given(seeds, st.integers(2, 7), st.integers(2, 7))
def test_normal_family_orthonormal(seed, p, q):
    _, m, proj = _proj(seed, p, q)
    basis = np.eye(p * q).reshape(p * q, p, q)
    gram = normal_inner(proj, basis)  # (pq, k): columns are vec(N_k)
    assert np.max(np.abs(gram.T @ gram - np.eye(proj.normal_dim))) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_eckart_young_minimality(seed):
    rng = gen(seed)
    m = rng.normal(size=(3, 3))
    proj = project_rank(m, 1)
    best = np.linalg.norm(m - proj.truncated)
    u = proj.U[:, 0] * proj.sigma[0]
    v = proj.V[:, 0]
    for _ in range(1000):
        cand = np.outer(u + 0.3 * rng.normal(size=3), v + 0.3 * rng.normal(size=3))
        assert best <= np.linalg.norm(m - cand) + 1e-12


# -- solver --------------------------------------------------------------------


@SOME
@given(seeds)
def test_membership_preservation(seed):
    s, base, gens, m, r = transversal_instance(gen(seed))
    for _ in range(3):
        try:
            x1 = step_newton_v1(m, s, r)
            x2 = step_newton_v2(m, s, r)
            x3 = step_cadzow(m, s, r)
        except GapTooSmall:
            return
        assert s.residual(x1) <= 1e-10 * np.linalg.norm(x1)
        assert s.residual(x2) <= 1e-8 * np.linalg.norm(x2)
        assert s.residual(x3) <= 1e-8 * np.linalg.norm(x3)
        m = x1


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_newton_step_is_the_closest_feasible_point(seed):
    rng = gen(seed)
    p, q, r = int(rng.integers(3, 7)), int(rng.integers(3, 7)), 1
    s, base, gens, m, r = transversal_instance(rng, p, q, r)
    x = step_newton_v1(m, s, r)
    proj = project_rank(m, r)
    assert s.residual(x) <= 1e-8 * np.linalg.norm(x)
    assert np.max(np.abs(normal_inner(proj, x - proj.truncated))) <= 1e-8 * np.linalg.norm(m)
    dist = np.linalg.norm(x - m)
    for y in random_feasible_tangent_point(rng, m, base, gens, r, 1000):
        assert dist <= np.linalg.norm(y - m) + 1e-8 * np.linalg.norm(m)
    assert np.allclose(x, kkt_newton_step(m, base, gens, r), atol=1e-8 * np.linalg.norm(m))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_newton_rate_quadratic_on_gcd(seed):
    rng = gen(seed)
    f1, g1, h = rng.uniform(-10, 10, (3, 5))
    f, g = np.convolve(f1, h), np.convolve(g1, h)
    nrm = np.sqrt(f @ f + g @ g)
    noise = 1e-4
    pair = PolyPair(f / nrm + rng.normal(0, noise, 9), g / nrm + rng.normal(0, noise, 9))
    sylv = SylvesterStructure(8, 8, 4)
    m0 = sylv.embed(pair)
    res = solve(SlraProblem(m0, sylv.structure, sylv.rank, method="newton_v1",
                            stopping=StoppingCriteria(step_tol=1e-14 * np.linalg.norm(m0), max_iters=30)))
    est = rate_estimate(res.trace)
    if est.usable_steps >= 4:
        assert est.classification == "quadratic"


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_cadzow_rate_linear(seed):
    inst = gen_hankel(1e-2, seed=seed)
    hs = HankelStructure(7, 5)
    m0 = hs.embed(inst.noisy)
    res = solve(SlraProblem(m0, hs.structure, 4, method="cadzow",
                            stopping=StoppingCriteria(step_tol=1e-12 * np.linalg.norm(m0), max_iters=100)))
    steps = res.trace.step_norms
    steps = steps[steps > 1e-12 * np.linalg.norm(m0)]
    ratios = steps[1:] / steps[:-1]
    assert ratios.size >= 10
    tail = ratios[-10:]
    assert rate_estimate(res.trace).classification != "quadratic"
    assert np.all((tail > 0) & (tail < 1))
    assert np.std(tail) < 0.05


# -- structures ------------------------------------------------------------------


@MANY
@given(seeds, st.integers(1, 6), st.integers(1, 6), st.data())
def test_sylvester_linearity(seed, m, n, data):
    d = data.draw(st.integers(1, min(m, n)))
    rng = gen(seed)
    a, b = rng.normal(size=2)
    p1 = PolyPair(rng.normal(size=m + 1), rng.normal(size=n + 1))
    p2 = PolyPair(rng.normal(size=m + 1), rng.normal(size=n + 1))
    lhs = sylvester_matrix(PolyPair(a * p1.f + b * p2.f, a * p1.g + b * p2.g), d)
    rhs = a * sylvester_matrix(p1, d) + b * sylvester_matrix(p2, d)
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-14 * (1 + np.abs(rhs).max()))
