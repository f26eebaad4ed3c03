from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cavkit.corpus import composite_corpus, grid, harness_corpus
from cavkit.monops import (CcInstance, OperatorGraph, cc_check, cc_maximality_harness, graph_sum,
                           is_grid_maximal, is_monotone, linear_transform, op_algebra, parallel_sum,
                           strong_maximality_harness, verify_composite_representability)
from cavkit.numcore import GridFn, Polytope, RatLinMap
from cavkit.reprfn import graph_of, inverse_normal_repr, normal_cone_repr, separable_repr
from oracles import is_monotone_oracle, parallel_sum_oracle

F = Fraction
K11 = Polytope.interval(-1, 1)


def g1(pairs):
    return OperatorGraph.from_pairs([((x,), (s,)) for x, s in pairs], 1, 1)


def ident(lo=-3, hi=3, step=1):
    return g1([(F(k) * step, F(k) * step) for k in range(lo, hi + 1)])


def test_monotonicity_examples():
    assert is_monotone(ident())[0]
    ok, bad = is_monotone(g1([(0, 1), (1, 0)]))
    assert not ok and set(bad) == {((0,), (1,)), ((1,), (0,))}
    E = grid(-2, 2, F(1, 2))
    phi = GridFn.from_callable(E, lambda p: np.abs(p[:, 0]) + p[:, 0] ** 2)
    assert is_monotone(graph_of(separable_repr(phi, grid(-6, 6, F(1, 2)))))[0]


def test_algebra_examples():
    even = g1([(x, x) for x in range(-4, 5, 2)])
    par = op_algebra(even, even, "parallel")
    assert {(x[0], s[0]) for x, s in par} == {(2 * k, k) for k in range(-4, 5, 2)}
    S = g1([(0, 1), (1, 1), (1, 2), (2, -1)])
    assert op_algebra(op_algebra(S, mode="inverse"), mode="inverse") == S
    zero = g1([(x, 0) for x in range(-1, 2)])
    assert op_algebra(ident(), zero, "sum") == ident(-1, 1)
    with pytest.raises(ValueError):
        op_algebra(S, S, "product")
    A = RatLinMap.scalar(2)
    T = linear_transform(ident(-4, 4), A, [(x,) for x in range(-3, 4)])
    assert {(x[0], s[0]) for x, s in T} == {(x, 4 * x) for x in range(-2, 3)}


def test_cc_examples():
    star = CcInstance.star([0], K11)
    v = cc_check(ident(), star)
    assert v.hypothesis and v.conclusion and v.holds
    holey = g1([(1, 1), (-1, -1)])
    v = cc_check(holey, star)
    assert v.hypothesis and not v.conclusion and not v.holds
    v = cc_check(ident(), CcInstance.star([0], Polytope.interval(2, 3)))
    assert v.vacuous and v.holds and v.blocking_pair is not None
    sp = CcInstance.space(K11, [0])
    assert cc_check(ident(), sp).holds


def test_harness_examples():
    E, Es = grid(-6, 6), grid(-6, 6, F(1, 2))
    ext = (grid(-3, 3), grid(-3, 3, F(1, 2)))
    stars = [CcInstance.star([y], K11) for y in (-1, 0, 1)]
    q = separable_repr(GridFn.from_callable(E, lambda p: np.abs(p[:, 0])), Es)
    rep = cc_maximality_harness(graph_of(q), stars + [CcInstance.space(K11, [0])], E, Es, extent=ext)
    assert rep.ok and rep.count("verified") + rep.count("vacuous") > 0
    # the integer identity graph misses the half-step points between its pairs
    rep = cc_maximality_harness(ident(-6, 6), stars, E, grid(-6, 6), extent=(grid(-3, 3), grid(-3, 3)))
    assert rep.count("skipped") == len(stars)
    assert not is_grid_maximal(ident(-6, 6), grid(-3, 3), grid(-3, 3))[0]
    rep = cc_maximality_harness(ident(), [CcInstance.star([0], K11)], E, Es,
                                maximality_oracle=lambda T: True)
    assert rep.count("verified") == 1


def test_strong_harness_examples():
    E, Es = grid(-4, 4), grid(-4, 4, F(1, 2))
    ext = (grid(-2, 2), grid(-2, 2, F(1, 2)))
    q = separable_repr(GridFn.from_callable(E, lambda p: 0.5 * p[:, 0] ** 2), Es)
    rep = strong_maximality_harness(q, [CcInstance.star([0], K11)], extent=ext, check_composite=True)
    assert rep.ok and rep.count("verified") == 1 and not rep.composite_failures
    inv = inverse_normal_repr([0], K11, E, Es)
    rep = strong_maximality_harness(inv, [CcInstance.star([0], K11), CcInstance.space(K11, [0])], extent=ext)
    assert rep.ok
    rep = strong_maximality_harness(q, [CcInstance.star([0], Polytope.interval(3, 4))], extent=ext)
    assert rep.outcomes[0].status in ("vacuous", "skipped") and rep.ok


def test_composite_examples():
    E, Es = grid(-3, 3), grid(-3, 3, F(1, 2))
    q = separable_repr(GridFn.from_callable(E, lambda p: 0.5 * p[:, 0] ** 2), Es)
    r = verify_composite_representability(q, q, RatLinMap.identity(1), "a")
    assert r.status == "verified" and r.graphs_equal
    assert r.closure_graph == graph_sum(graph_of(q), graph_of(q)).restrict(E, Es)
    assert {((x,), (2 * x,)) for x in (-1, 0, 1)} <= r.closure_graph.pairs
    nc = normal_cone_repr(K11, [0], E, Es)
    assert verify_composite_representability(q, nc, RatLinMap.identity(1), "c").status == "verified"
    left = normal_cone_repr(Polytope.point([-1]), [0], E, Es)
    right = normal_cone_repr(Polytope.point([1]), [0], E, Es)
    assert verify_composite_representability(left, right, RatLinMap.identity(1), "a").status == "inapplicable"


def test_composite_corpus():
    for c in composite_corpus():
        assert verify_composite_representability(c.f, c.g, c.M, c.variant).status == c.expect, c.name


def test_harness_corpus_1d():
    for h in harness_corpus():
        if h.graph.dim == 1:
            assert cc_maximality_harness(h.graph, h.instances, h.e_grid, h.es_grid, extent=h.extent).ok


@st.composite
def graphs(draw, monotone=False):
    n = draw(st.integers(0, 6))
    if monotone:
        # graphs of nondecreasing maps are monotone in one dimension
        xs = sorted(draw(st.lists(st.integers(-4, 4), min_size=n, max_size=n)))
        ss = sorted(draw(st.lists(st.integers(-4, 4), min_size=n, max_size=n)))
        return g1(zip(xs, ss))
    return g1(draw(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), max_size=n)))


@given(graphs(), graphs())
def test_parallel_sum_identity(S, T):
    a = parallel_sum(S, T, "definition")
    assert a == parallel_sum(S, T, "inverses")
    assert a.pairs == parallel_sum_oracle(S, T)


@given(graphs(True), graphs(True), st.integers(-2, 2))
def test_monotonicity_preserved(S, T, a):
    for G in (graph_sum(S, T), S.inverse(), parallel_sum(S, T),
              linear_transform(S, RatLinMap.scalar(a), [(x,) for x in range(-4, 5)])):
        assert is_monotone(G)[0] and is_monotone_oracle(G)


@given(graphs())
def test_is_monotone_matches_oracle(S):
    assert is_monotone(S)[0] == is_monotone_oracle(S)


@given(graphs(True))
def test_grid_maximal_matches_brute_force(S):
    E, Es = grid(-2, 2), grid(-2, 2)
    got, cand = is_grid_maximal(S, E, Es)
    addable = [(x, s) for x in E.exact_points() for s in Es.exact_points()
               if (x, s) not in S.pairs and is_monotone_oracle(list(S.pairs) + [(x, s)])]
    if S.is_empty:
        assert not got
    else:
        assert got == (not addable)
        if not got:
            assert cand == addable[0]
