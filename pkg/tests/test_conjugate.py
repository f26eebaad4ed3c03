from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cavkit.conjugate import (DualGridError, bracketing_dual, closure, conjugate, conjugate_argmax,
                              conjugate_fast, fy_gap, is_closed, max_slope, slope_bounds)
from cavkit.numcore import GridFn, ImproperError, LatticeGrid
from oracles import conjugate_exact, lower_hull_1d, points, random_gridfn

seeds = st.integers(0, 2**32 - 1)


def G(lo, hi, step=1):
    return LatticeGrid.from_bounds(lo, hi, step)


# ---------------------------------------------------------------- examples

def test_point_indicator_conjugate_is_zero():
    f = GridFn(G(0, 0), [0.0])
    assert np.all(conjugate(f, G(-5, 5)).values == 0)
    assert np.all(conjugate_fast(f, G(-5, 5, Fraction(1, 3))).values == 0)


def test_abs_samples_conjugate():
    f = GridFn(G(-1, 1), [1.0, 0.0, 1.0])
    assert conjugate(f, G(-1, 1)).values.tolist() == [0.0, 0.0, 0.0]


def test_closure_examples():
    q = GridFn.from_callable(G(-2, 2), lambda p: 0.5 * p[:, 0] ** 2)
    assert np.array_equal(closure(q).values, q.values)
    assert closure(GridFn(G(-1, 1), [0.0, 1.0, 0.0])).values.tolist() == [0.0, 0.0, 0.0]
    assert closure(GridFn(G(-1, 1), [0.0, np.inf, 0.0])).values.tolist() == [0.0, 0.0, 0.0]


def test_fy_gap_examples():
    q = GridFn.from_callable(G(-2, 2), lambda p: 0.5 * p[:, 0] ** 2)
    assert fy_gap(q, (1,), (1,)) == 0
    assert fy_gap(q, (1,), (0,)) == 0.5
    ind = GridFn(G(0, 0), [0.0])
    assert all(fy_gap(ind, (0,), (s,)) == 0 for s in range(-3, 4))
    with pytest.raises(ValueError):
        fy_gap(q, (Fraction(1, 2),), (0,))


def test_argmax_ties_go_to_smallest_index():
    f = GridFn(G(-1, 1), [0.0, 0.0, 0.0])
    _, arg = conjugate_argmax(f, G(0, 0))
    assert arg.tolist() == [0]


def test_improper_input_rejected():
    with pytest.raises(ImproperError):
        GridFn(G(-1, 1), [np.inf] * 3)


def test_slope_helpers():
    f = GridFn(G(-2, 2), [4.0, 1.0, 0.0, 1.0, 4.0])
    assert slope_bounds(f) == [(Fraction(-3), Fraction(3))]
    assert max_slope(f) == 3.0
    d = bracketing_dual(f)
    assert d.axis(0).min() < -3 and d.axis(0).max() > 3
    with pytest.raises(DualGridError):
        closure(f, G(-1, 1))


# ---------------------------------------------------------------- oracle equivalence

@given(seeds, st.integers(1, 3), st.sampled_from([0.0, 0.3]))
def test_fast_conjugate_matches_brute_force_exactly(seed, dims, inf_rate):
    rng = np.random.default_rng(seed)
    f = random_gridfn(rng, dims, 6 if dims < 3 else 4, inf_rate)
    dual = random_gridfn(rng, dims, 7 if dims < 3 else 4).grid
    assert np.array_equal(conjugate_fast(f, dual).values, conjugate(f, dual).values)


@given(seeds, st.integers(1, 2))
def test_brute_conjugate_matches_exact_oracle(seed, dims):
    rng = np.random.default_rng(seed)
    f = random_gridfn(rng, dims, 5, 0.2)
    dual = random_gridfn(rng, dims, 5).grid
    got = conjugate(f, dual).values.ravel()
    want = conjugate_exact(f, dual)
    for a, b in zip(got, want):
        assert abs(a - float(b)) <= 4 * np.finfo(float).eps * max(1.0, abs(float(b)))


def test_fast_conjugate_with_infinite_rows():
    rng = np.random.default_rng(3)
    g = G([-2, -2], [2, 2])
    vals = rng.normal(size=(5, 5))
    vals[1, :] = np.inf
    vals[:, 3] = np.inf
    f = GridFn(g, vals)
    dual = G([-3, -3], [3, 3])
    assert np.array_equal(conjugate_fast(f, dual).values, conjugate(f, dual).values)


# ---------------------------------------------------------------- invariants

@given(seeds, st.integers(1, 2))
def test_order_reversal(seed, dims):
    rng = np.random.default_rng(seed)
    f = random_gridfn(rng, dims, 5, 0.2)
    g = GridFn(f.grid, f.values + rng.integers(0, 3, size=f.values.shape))
    dual = random_gridfn(rng, dims, 5).grid
    assert np.all(conjugate(g, dual).values <= conjugate(f, dual).values)


@given(seeds, st.integers(1, 2))
def test_conjugate_is_finite(seed, dims):
    rng = np.random.default_rng(seed)
    f = random_gridfn(rng, dims, 5, 0.5)
    assert np.all(np.isfinite(conjugate_fast(f, random_gridfn(rng, dims, 5).grid).values))


@given(seeds, st.integers(1, 2))
def test_closure_properties(seed, dims):
    rng = np.random.default_rng(seed)
    f = random_gridfn(rng, dims, 5, 0.2)
    c = closure(f)
    assert np.all(c.values <= f.values)
    assert np.array_equal(closure(c).values, c.values)
    assert is_closed(c)
    dual = bracketing_dual(f)
    a, b = conjugate(c, dual).values, conjugate(f, dual).values
    assert np.allclose(a, b, rtol=0, atol=8 * np.finfo(float).eps * max(1.0, np.abs(b).max()))


@given(seeds)
def test_closure_1d_matches_chord_oracle(seed):
    rng = np.random.default_rng(seed)
    f = random_gridfn(rng, 1, 8, 0.0)
    xs = [p[0] for p in points(f.grid)]
    ys = [Fraction(float(v)) for v in f.values]
    want = lower_hull_1d(xs, ys)
    got = closure(f).values
    assert np.allclose(got, [float(w) for w in want], rtol=0, atol=1e-12)


@given(seeds, st.integers(1, 2))
def test_fy_gap_nonnegative_for_closed_functions(seed, dims):
    rng = np.random.default_rng(seed)
    f = closure(random_gridfn(rng, dims, 4, 0.2))
    dual = random_gridfn(rng, dims, 4).grid
    for x in list(points(f.grid))[:6]:
        for s in list(points(dual))[:6]:
            gap = fy_gap(f, x, s)
            assert gap.is_inf or gap.value >= -1e-12
