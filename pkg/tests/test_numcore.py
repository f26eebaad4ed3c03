import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cavkit.numcore import (INF, ExtReal, GridFn, ImproperError, LatticeGrid, Polytope, RatLinMap,
                            grid_compatible, image_indices)
from oracles import points

rationals = st.fractions(min_value=-4, max_value=4, max_denominator=4)


# ---------------------------------------------------------------- ExtReal

def test_minus_infinity_is_rejected():
    with pytest.raises(ImproperError):
        ExtReal(-math.inf)
    with pytest.raises(ImproperError):
        -INF
    with pytest.raises(ImproperError):
        ExtReal(1) - INF


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_plus_infinity_absorbs_addition(r):
    assert (INF + r).is_inf and (ExtReal(r) + INF).is_inf
    assert ExtReal(r) < INF


def test_nan_rejected():
    with pytest.raises(ValueError):
        ExtReal(float("nan"))


# ---------------------------------------------------------------- grids

def test_row_major_order_matches_index_formula():
    g = LatticeGrid.from_bounds([-1, 0], [1, Fraction(1, 2)], [1, Fraction(1, 4)])
    assert list(g.exact_points()) == list(points(g))
    assert g.shape == (3, 3)
    assert np.array_equal(g.points()[4], [0.0, 0.25])


@given(st.integers(1, 3), st.data())
def test_grid_points_are_origin_plus_step_times_index(dim, data):
    steps = [data.draw(st.sampled_from([Fraction(1), Fraction(1, 2), Fraction(2, 3)])) for _ in range(dim)]
    lo = [data.draw(st.integers(-3, 0)) for _ in range(dim)]
    hi = [data.draw(st.integers(0, 3)) for _ in range(dim)]
    g = LatticeGrid((Fraction(1, 3),) * dim, steps, lo, hi)
    for k, p in zip(itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]), g.exact_points()):
        assert p == tuple(Fraction(1, 3) + s * i for s, i in zip(steps, k))
        assert g.flat_index(p) is not None and g.exact_point(g.flat_index(p)) == p


def test_off_grid_lookup_is_infinite():
    g = LatticeGrid.from_bounds(-1, 1)
    f = GridFn(g, [1.0, 0.0, 1.0])
    assert f.at((Fraction(1, 2),)).is_inf and f.at((5,)).is_inf
    assert f.at((0,)) == 0


def test_gridfn_properness():
    g = LatticeGrid.from_bounds(-1, 1)
    with pytest.raises(ImproperError):
        GridFn(g, [np.inf] * 3)
    with pytest.raises(ImproperError):
        GridFn(g, [0.0, -np.inf, 0.0])
    with pytest.raises(ValueError):
        GridFn(g, [0.0, 1.0])


# ---------------------------------------------------------------- maps

@given(st.integers(1, 3), st.integers(1, 3), st.data())
def test_transpose_is_an_involution(r, c, data):
    M = RatLinMap(tuple(tuple(data.draw(rationals) for _ in range(c)) for _ in range(r)))
    assert M.T.T == M
    assert (M.T.rows, M.T.cols) == (c, r)


def test_grid_compatible_examples():
    g = LatticeGrid.from_bounds(-2, 2)
    assert grid_compatible(RatLinMap.identity(1), g, g)
    assert grid_compatible(RatLinMap.scalar(2), g, LatticeGrid.from_bounds(-4, 4))
    assert not grid_compatible(RatLinMap.scalar(Fraction(1, 2)), LatticeGrid.from_bounds(-1, 1),
                               LatticeGrid.from_bounds(-1, 1))
    with pytest.raises(ValueError):
        grid_compatible(RatLinMap.identity(2), g, g)


@given(st.data())
def test_grid_compatible_is_exact_membership(data):
    a = data.draw(rationals)
    step = data.draw(st.sampled_from([Fraction(1), Fraction(1, 2), Fraction(1, 3)]))
    src = LatticeGrid.from_bounds(-2, 2)
    dst = LatticeGrid.from_bounds(-2 * step, 2 * step, step)
    expect = all(((a * k) / step).denominator == 1 for k in range(-2, 3))
    assert grid_compatible(RatLinMap.scalar(a), src, dst) == expect


def test_image_indices_mark_off_extent_points():
    src = LatticeGrid.from_bounds(-2, 2)
    dst = LatticeGrid.from_bounds(-2, 2)
    idx = image_indices(RatLinMap.scalar(2), src, dst)
    assert idx.tolist() == [-1, 0, 2, 4, -1]


# ---------------------------------------------------------------- polytopes

@given(st.integers(1, 3), st.data())
def test_support_is_vertex_max_and_ignores_duplicates(dim, data):
    verts = [tuple(data.draw(rationals) for _ in range(dim)) for _ in range(data.draw(st.integers(1, 4)))]
    s = tuple(data.draw(rationals) for _ in range(dim))
    P = Polytope(tuple(verts))
    Q = Polytope(tuple(verts + [verts[0]]))
    expect = max(sum(a * b for a, b in zip(v, s)) for v in verts)
    assert P.support(s) == expect == Q.support(s)
    assert P.min_pairing(s) == -(-P).support(s)


def test_polytope_membership_is_exact():
    T = Polytope(((0, 0), (1, 0), (0, 1)))
    assert T.contains((Fraction(1, 2), Fraction(1, 2)))
    assert not T.contains((Fraction(1, 2), Fraction(1, 2) + Fraction(1, 10**12)))
    with pytest.raises(ValueError):
        Polytope(())
