from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cavkit.conjugate import conjugate_fast
from cavkit.corpus import auto_setup, grid, random_constrained_setup, random_coupled_setup
from cavkit.numcore import GridFn, IncompatibleError, LatticeGrid, RatLinMap
from cavkit.quadab import (ConstrainedSetup, QuadSetup, constrained_dual_min, constrained_infconv,
                           coupled_dual_min, coupled_dual_table, coupled_infconv, cross_path_check,
                           lift_to_constrained, shear_preimage_sets, verify_constrained_duality,
                           verify_coupled_duality)
from oracles import constrained_infconv_exact, coupled_infconv_exact, points

seeds = st.integers(0, 2**32 - 1)
I1 = RatLinMap.identity(1)
P3 = grid([-1, -1], [1, 1])


def indicator(g: LatticeGrid, p):
    v = np.full(g.size, np.inf)
    v[g.flat_index(p)] = 0.0
    return GridFn(g, v.reshape(g.shape))


def sq(g):
    return GridFn.from_callable(g, lambda p: (p ** 2).sum(axis=1))


def setup(f, g, A=I1, B=I1, dual=grid(-2, 2), **kw):
    return QuadSetup(f, g, A, B, 1, 1, dual, dual, dual, dual, **kw)


# ---------------------------------------------------------------- coupled form

def test_point_indicators_give_point_indicator():
    s = setup(indicator(P3, (0, 0)), indicator(P3, (0, 0)))
    h = coupled_infconv(s)
    assert np.array_equal(h.values, indicator(P3, (0, 0)).values)


def test_quadratic_infconv_closed_form():
    # h(x, u) = 2 x^2 + min_v (u - v)^2 + v^2 over v in {-1, 0, 1}
    h = coupled_infconv(setup(sq(P3), sq(P3)))
    for (x, u), val in zip(points(P3), h.values.ravel()):
        want = 2 * x * x + min((u - v) ** 2 + v * v if -1 <= u - v <= 1 else np.inf for v in (-1, 0, 1))
        assert val == want


@given(seeds)
def test_coupled_infconv_matches_exact_oracle(seed):
    s = random_coupled_setup(np.random.default_rng(seed))
    h = coupled_infconv(s)
    want = coupled_infconv_exact(s.f, s.g, s.A, s.B, s.dx, s.dy)
    for p, v in zip(points(h.grid), h.values.ravel()):
        w = want[p]
        assert (w is None and v == np.inf) or (w is not None and v == float(w))


def test_dual_min_for_point_indicators():
    s = setup(indicator(P3, (0, 0)), indicator(P3, (0, 0)), dual=grid(-1, 1))
    val, wit = coupled_dual_min(s, (0, 0))
    assert val == 0
    # every y* ties; the lexicographically smallest Y* point is reported
    assert wit == (-1,)
    z = grid(0, 0)
    s0 = QuadSetup(s.f, s.g, I1, I1, 1, 1, z, z, z, z)
    assert coupled_dual_min(s0, (0, 0)) == (0, (0,))


def test_dual_min_quadratic_at_origin_matches_brute_force():
    s = setup(sq(P3), sq(P3))
    fs, gs = conjugate_fast(s.f, s.f_dual), conjugate_fast(s.g, s.g_dual)
    want = min(float(fs.at((-y, 0))) + float(gs.at((y, 0))) for y in range(-2, 3))
    val, _ = coupled_dual_min(s, (0, 0))
    assert val == want


def test_identity_maps_reproduce_the_bivariate_formula():
    s = auto_setup("q", sq(grid([-2, -2], [2, 2])), sq(grid([-2, -2], [2, 2])), I1, I1, 1, 1)
    fs, gs = conjugate_fast(s.f, s.f_dual), conjugate_fast(s.g, s.g_dual)
    rhs, _ = coupled_dual_table(s, fs, gs)
    for p, v in zip(points(s.f_dual), rhs.ravel()):
        xs, us = p
        direct = min(float(fs.at((xs - y, us))) + float(gs.at((y, us))) for (y,) in points(s.y_dual))
        assert v == direct


def test_verify_examples():
    r = verify_coupled_duality(setup(indicator(P3, (0, 0)), indicator(P3, (0, 0))))
    assert r.max_gap == 0 and r.qualification.is_subspace and r.success
    nonconvex = GridFn(P3, [[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    assert verify_coupled_duality(setup(nonconvex, sq(P3))).weak_ok
    g = grid([-2, -2], [2, 2])
    q = auto_setup("q", sq(g), sq(g), I1, I1, 1, 1)
    rq = verify_coupled_duality(q)
    assert rq.strong_applicable and rq.max_gap.value <= rq.tolerance
    assert rq.tolerance > 0


def test_setup_validation():
    with pytest.raises(ValueError):
        QuadSetup(sq(P3), sq(P3), RatLinMap.identity(2), I1, 1, 1, *[grid(-1, 1)] * 4)
    with pytest.raises(IncompatibleError):
        setup(sq(P3), sq(P3), A=RatLinMap.scalar(Fraction(1, 2)))


@given(seeds)
def test_weak_duality_on_random_setups(seed):
    s = random_coupled_setup(np.random.default_rng(seed))
    assert verify_coupled_duality(s, check_closed=False, qualify=False).weak_ok
    assert verify_constrained_duality(lift_to_constrained(s), check_closed=False, qualify=False).weak_ok


# ---------------------------------------------------------------- constrained form

def constrained(k, C, D, X, U, dual):
    dw = C.rows
    return ConstrainedSetup(k, C, D, dw, X, U, dual, dual, dual, dual)


def test_identity_constraints_return_k():
    k = GridFn(P3, np.arange(9.0).reshape(3, 3))
    h = constrained_infconv(constrained(k, I1, I1, grid(-1, 1), grid(-1, 1), grid(-1, 1)))
    assert np.array_equal(h.values, k.values)


def test_doubling_constraint():
    k = GridFn(P3, np.arange(9.0).reshape(3, 3))
    U = grid(-2, 2)
    h = constrained_infconv(constrained(k, I1, RatLinMap.scalar(2), grid(-1, 1), U, grid(-1, 1)))
    for (x, u), v in zip(points(h.grid), h.values.ravel()):
        if u % 2:
            assert v == np.inf
        else:
            assert v == float(k.at((x, u / 2)))


def test_pinned_constraint_dual_min():
    k = GridFn(P3, np.arange(9.0).reshape(3, 3))
    s = constrained(k, I1, I1, grid(-1, 1), grid(-1, 1), grid(-2, 2))
    ks = conjugate_fast(k, s.w_dual.product(s.t_dual))
    for x0 in range(-2, 3):
        val, wit = constrained_dual_min(s, (x0, 1), ks)
        assert wit == (x0,) and val == ks.at((x0, 1))
    ind = indicator(P3, (0, 0))
    s2 = constrained(ind, I1, I1, grid(-1, 1), grid(-1, 1), grid(-2, 2))
    assert constrained_dual_min(s2, (1, -1))[0] == 0


def test_lift_examples():
    s = setup(indicator(P3, (0, 0)), indicator(P3, (0, 0)))
    L = lift_to_constrained(s)
    assert L.k.dim == 4 and np.isfinite(L.k.values).sum() == 1 and L.k.at((0, 0, 0, 0)) == 0
    q = lift_to_constrained(setup(sq(P3), sq(P3)))
    for (x, y, u, v), val in zip(points(q.k.grid), q.k.values.ravel()):
        assert val == x * x + u * u + y * y + v * v


def test_cross_path_on_lifted_setups():
    for seed in range(20):
        s = random_coupled_setup(np.random.default_rng(seed))
        assert cross_path_check(s).ok
        L = lift_to_constrained(s)
        fs, gs = conjugate_fast(s.f, s.f_dual), conjugate_fast(s.g, s.g_dual)
        p = next(iter(s.f_dual.exact_points()))
        assert coupled_dual_min(s, p, fs, gs)[0] == constrained_dual_min(L, p)[0]


@given(seeds)
def test_constrained_infconv_matches_exact_oracle(seed):
    s = random_constrained_setup(np.random.default_rng(seed))
    h = constrained_infconv(s)
    want = constrained_infconv_exact(s.k, s.C, s.D, s.dw, s.x_grid, s.u_grid)
    for p, v in zip(points(h.grid), h.values.ravel()):
        w = want[p]
        assert (w is None and v == np.inf) or (w is not None and v == float(w))


@given(seeds)
def test_constrained_weak_duality_on_random_setups(seed):
    s = random_constrained_setup(np.random.default_rng(seed))
    assert verify_constrained_duality(s, check_closed=False, qualify=False).weak_ok


# ---------------------------------------------------------------- shear identity

def test_shear_examples():
    box = grid([-1, -1], [1, 1])
    lhs, rhs, eq = shear_preimage_sets([(0, 0)], I1, box)
    assert eq and lhs == {(t, t) for t in (-1, 0, 1)}
    box2 = grid([-2, -2], [2, 2])
    lhs, rhs, eq = shear_preimage_sets([(1, 2)], RatLinMap.scalar(2), box2)
    assert eq and lhs == {(x, 2 * x) for x in (-1, 0, 1)}
    lhs, rhs, eq = shear_preimage_sets([(0, 1), (2, -1)], RatLinMap.zeros(1, 1), box2)
    assert eq and rhs == {(x, z) for x in range(-2, 3) for z in (1, -1)}


@given(seeds)
def test_shear_identity_random(seed):
    from cavkit.checks import random_shear_instance
    G, R, box = random_shear_instance(np.random.default_rng(seed))
    lhs, rhs, eq = shear_preimage_sets(G, R, box)
    assert eq
    # independent membership test for the right-hand side
    dx = R.cols
    qg = {tuple(p[dx + i] - sum(R.entries[i][j] * p[j] for j in range(dx)) for i in range(R.rows))
          for p in G}
    for q in points(box):
        inside = tuple(q[dx + i] - sum(R.entries[i][j] * q[j] for j in range(dx))
                       for i in range(R.rows)) in qg
        assert inside == (q in rhs)
