from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cavkit.corpus import grid
from cavkit.numcore import GridFn, RatLinMap
from cavkit.qualif import (check_qualification, check_qualification_constrained, closure_containment,
                           cone_is_subspace, dom_project, sandwich_check)
from cavkit.quadab import QuadSetup, lift_to_constrained
from oracles import cone_is_subspace_oracle

P3 = grid([-1, -1], [1, 1])
I1 = RatLinMap.identity(1)
F = Fraction


def finite_at(g, pts):
    v = np.full(g.size, np.inf)
    for p in pts:
        v[g.flat_index(p)] = 0.0
    return GridFn(g, v.reshape(g.shape))


def qsetup(f, g, A=I1):
    d = grid(-2, 2)
    return QuadSetup(f, g, A, I1, 1, 1, d, d, d, d)


def test_dom_project_examples():
    assert dom_project(finite_at(P3, [(0, 0)]), [0]) == {(0,)}
    assert dom_project(GridFn(P3, np.zeros((3, 3))), [0]) == {(-1,), (0,), (1,)}
    assert dom_project(finite_at(P3, [(1, -1), (1, 0), (1, 1)]), [0]) == {(1,)}
    assert dom_project(finite_at(P3, [(1, -1), (0, 1)]), [1]) == {(-1,), (1,)}
    with pytest.raises(ValueError):
        dom_project(GridFn(P3, np.zeros((3, 3))), [2])


def test_cone_examples():
    r = cone_is_subspace([(1, 0), (-1, 0)])
    assert r.is_subspace and r.basis == ((1, 0),) and r.verify()
    r = cone_is_subspace([(1, 0)])
    assert not r.is_subspace and r.verify() and r.separator is not None
    r = cone_is_subspace([(1, 1), (-1, 0), (0, -1)])
    assert r.is_subspace and len(r.basis) == 2 and r.verify()
    assert cone_is_subspace([(0, 0)]).is_subspace
    with pytest.raises(ValueError):
        cone_is_subspace([])
    with pytest.raises(ValueError):
        cone_is_subspace([(1,), (1, 2)])


def test_setup_qualification_examples():
    ind = finite_at(P3, [(0, 0)])
    qc = check_qualification(qsetup(ind, ind))
    assert qc.is_subspace and qc.meets and qc.generators == ()
    full = GridFn(P3, np.zeros((3, 3)))
    qc = check_qualification(qsetup(ind, full))
    assert qc.is_subspace and qc.verify()
    g1 = finite_at(P3, [(1, 0)])
    qc = check_qualification(qsetup(ind, g1))
    assert not qc.is_subspace and not qc.meets and qc.verify()
    # the constrained form of the same setups agrees
    for g in (ind, full, g1):
        s = qsetup(ind, g)
        assert check_qualification_constrained(lift_to_constrained(s)).is_subspace == \
            check_qualification(s).is_subspace


def test_sandwich_examples():
    assert sandwich_check([(0, 0)], [], [(0, 0)]).holds
    assert sandwich_check([(1, 0), (-2, 0)], [(1, 0)], [(1, 0), (-1, 0)]).holds
    r = sandwich_check([(1, 0), (0, 1)], [(1, 0)], [(1, 0), (-1, 0)])
    assert not r.holds and r.offending == (0, 1)
    assert not sandwich_check([(1, 0)], [(1, 0)], [(1, 0)]).holds
    with pytest.raises(ValueError):
        sandwich_check([(1, 0)], [(1,)], [(1, 0)])


def test_closure_containment():
    ok, worst, d = closure_containment([(0,), (F(1, 2),)], [(0,), (1,)], 0.5)
    assert ok and d == 0.5
    assert not closure_containment([(3,)], [(0,)], 1.0)[0]


vec = st.lists(st.integers(-3, 3), min_size=1, max_size=3)


@st.composite
def generator_sets(draw):
    dim = draw(st.integers(1, 3))
    n = draw(st.integers(1, 4))
    return [tuple(draw(st.lists(st.integers(-3, 3), min_size=dim, max_size=dim))) for _ in range(n)]


@given(generator_sets())
def test_cone_matches_oracle(D):
    r = cone_is_subspace(D)
    assert r.is_subspace == cone_is_subspace_oracle(D)
    assert r.verify()


@given(generator_sets(), st.data())
def test_cone_invariances(D, data):
    base = cone_is_subspace(D).is_subspace
    i = data.draw(st.integers(0, len(D) - 1))
    k = data.draw(st.integers(1, 5))
    scaled = list(D)
    scaled[i] = tuple(F(k, 2) * v for v in D[i])
    assert cone_is_subspace(scaled).is_subspace == base
    coef = data.draw(st.lists(st.integers(0, 3), min_size=len(D), max_size=len(D)))
    comb = tuple(sum(c * d[j] for c, d in zip(coef, D)) for j in range(len(D[0])))
    assert cone_is_subspace(list(D) + [comb]).is_subspace == base


@given(st.integers(0, 2**32 - 1))
def test_full_domain_g_gives_subspace(seed):
    rng = np.random.default_rng(seed)
    f = GridFn(P3, np.where(rng.random((3, 3)) < 0.5, np.inf, 0.0))
    if not np.isfinite(f.values).any():
        f = finite_at(P3, [(0, 0)])
    # on a finite grid the full domain of g must strictly contain A(pi_X dom f)
    wide = grid([-2, -1], [2, 1])
    g = GridFn(wide, np.zeros(wide.shape))
    a = int(rng.choice([-1, 1]))
    qc = check_qualification(qsetup(f, g, RatLinMap.scalar(a)))
    assert qc.is_subspace and qc.verify()
