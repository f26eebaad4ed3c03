from fractions import Fraction

import numpy as np
import pytest

from cavkit.corpus import br_corpus, grid, strong_corpus
from cavkit.monops import is_monotone
from cavkit.numcore import GridFn, Polytope
from cavkit.reprfn import (AtRepr, SampledRepr, at_transform, br_check, br_sweep, conjugate_formula_check,
                           graph_invariance_check, graph_of, inverse_normal_property_check,
                           inverse_normal_repr, is_representative, is_strongly_representative,
                           normal_cone_property_check, normal_cone_repr, separable_repr)
from oracles import conjugate_exact, is_monotone_oracle, points

F = Fraction
E3 = grid(-1, 1)
K11 = Polytope.interval(-1, 1)


def fn(g, f):
    return GridFn.from_callable(g, lambda p: f(p[:, 0]))


def half_sq(g=E3):
    return fn(g, lambda x: 0.5 * x ** 2)


def pairs(G):
    return {(x[0], s[0]) for x, s in G}


def sampled(values_fn, e=E3, es=E3):
    g = e.product(es)
    vals = np.array([values_fn(x, s) for x, s in points(g)], dtype=float)
    return SampledRepr(GridFn(g, vals.reshape(g.shape)), 1)


def test_representative_examples():
    assert is_representative(separable_repr(half_sq(), E3))
    zero = sampled(lambda x, s: 0.0)
    r = is_representative(zero)
    assert not r and r.worst_point in (((1,), (1,)), ((-1,), (-1,))) and r.worst_gap == -1
    assert is_representative(normal_cone_repr(K11, [0], E3, E3))


def test_strong_examples():
    assert is_strongly_representative(separable_repr(half_sq(), E3))
    assert is_strongly_representative(inverse_normal_repr([0], K11, E3, E3))
    # indicator of the origin of E x E*: above the pairing, but its conjugate
    # vanishes identically and dips below <u, u*> at (1, 1)
    point = sampled(lambda x, s: 0.0 if x == 0 and s == 0 else np.inf)
    assert is_representative(point)
    r = is_strongly_representative(point)
    assert not r and r.worst_gap == -1 and r.worst_point in (((1,), (1,)), ((-1,), (-1,)))


def test_closed_form_values():
    h = normal_cone_repr(K11, [0], E3, E3)
    assert h.value([F(1, 2)], [2]) == 2
    assert h.value([2], [0]) == np.inf
    g = inverse_normal_repr([0], K11, E3, E3)
    assert g.value([2], [F(1, 2)]) == 2
    assert g.value([0], [2]) == np.inf
    pt = normal_cone_repr(Polytope.point([0]), [0], E3, E3)
    assert all(pt.value([x], [s]) == (0 if x == 0 else np.inf) for x, s in points(E3.product(E3)))
    assert pt.multifunction([0]) == list(E3.exact_points())
    ipt = inverse_normal_repr([0], Polytope.point([0]), E3, E3)
    assert all(ipt.value([x], [s]) == (0 if s == 0 else np.inf) for x, s in points(E3.product(E3)))


def test_graph_examples():
    assert pairs(graph_of(separable_repr(half_sq(), E3))) == {(-1, -1), (0, 0), (1, 1)}
    want = {(-1, -1), (-1, 0), (0, 0), (1, 0), (1, 1)}
    assert pairs(graph_of(normal_cone_repr(K11, [0], E3, E3))) == want
    assert graph_of(sampled(lambda x, s: x * s + 1)).is_empty
    E = grid(-1, 1, F(1, 4))
    G = pairs(graph_of(separable_repr(fn(E, np.abs), E)))
    assert {(0, s) for (s,) in points(E) if abs(s) <= 1} <= G
    box = fn(E, lambda x: np.where((x >= 0) & (x <= 1), 0.0, np.inf))
    Gb = pairs(graph_of(separable_repr(box, E)))
    normal = {(x, s) for (x,) in points(E) for (s,) in points(E) if 0 <= x <= 1
              and (s == 0 or (x == 0 and s < 0) or (x == 1 and s > 0))}
    assert Gb == normal


def test_at_transform_examples():
    f = separable_repr(half_sq(), E3)
    assert np.array_equal(at_transform(f).values.values, f.sample().values)
    h = normal_cone_repr(K11, [0], E3, grid(-2, 2))
    t = at_transform(h)
    assert isinstance(t.repr, AtRepr)
    for (x, s), v in zip(points(h.grid), t.values.values.ravel()):
        assert v >= x * s
    s = at_transform(SampledRepr(f.sample(), 1))
    assert isinstance(s.repr, SampledRepr)


def test_conjugate_formula_against_exact_oracle():
    E, Es = grid(-1, 1, F(1, 2)), grid(-2, 2, F(1, 2))
    for f in (normal_cone_repr(K11, [F(1, 2)], E, Es), inverse_normal_repr([0], K11, E, Es),
              separable_repr(half_sq(E), Es)):
        oracle = conjugate_exact(f.sample(), f.dual_grid)
        for (us, u), o in zip(points(f.dual_grid), oracle):
            closed = f.conjugate_value([us], [u])
            # the grid sup is a lower bound for the continuum sup
            assert closed == np.inf or closed >= o
        assert conjugate_formula_check(f).ok


@pytest.mark.parametrize("f", strong_corpus(F(1, 4)), ids=lambda f: f.label)
def test_strong_corpus_properties(f):
    assert is_representative(f)
    assert is_strongly_representative(f)
    assert graph_invariance_check(f)
    G = graph_of(f)
    assert is_monotone(G)[0] and is_monotone_oracle(G)
    if f.exact:
        assert conjugate_formula_check(f).ok
    if f.kind == "normal_cone":
        assert normal_cone_property_check(f).ok
    if f.kind == "inverse_normal":
        assert inverse_normal_property_check(f).ok


def test_br_examples():
    E = grid(-2, 2, F(1, 4))
    f = separable_repr(half_sq(E), E)
    r = br_check(f, F(1, 2), F(1, 2), ([1], [F(1, 2)]))
    assert r.status == "witness" and r.gap == 0.125 and r.witness == ((F(3, 4),), (F(3, 4),))
    r = br_check(f, F(1, 3), F(1, 5), ([1], [1]))
    assert r.status == "witness" and r.gap == 0 and r.witness == ((1,), (1,))
    r = br_check(f, F(1, 4), F(1, 4), ([1], [-1]))
    assert r.status == "vacuous" and r.witness is None
    with pytest.raises(ValueError):
        br_check(f, 0, 1, ([0], [0]))


def test_br_never_fails_on_corpus():
    for f in br_corpus()[:4]:
        G = graph_of(f)
        for a in (F(1, 4), F(1, 2)):
            for p in list(f.grid.exact_points())[::13]:
                r = br_check(f, a, a, (p[:f.n], p[f.n:]), graph=G)
                assert r.ok, (f.label, p, r)


def test_br_sweep_matches_pointwise_checks():
    ab = [F(1, 4), F(1, 2), F(1)]
    for f in strong_corpus(F(1, 4))[:5]:
        G = graph_of(f)
        for sw in br_sweep(f, ab, ab, graph=G):
            counts = {"witness": 0, "vacuous": 0, "near_miss": 0, "fail": 0}
            for p in f.grid.exact_points():
                counts[br_check(f, sw.alpha, sw.beta, (p[:f.n], p[f.n:]), graph=G).status] += 1
            assert counts == sw.counts
            if F(1, 4) <= min(sw.alpha, sw.beta) / 2:
                assert sw.ok
