"""Curated verification instances.

The collections here feed the acceptance suite, the demos and the bundled
CLI scenarios.  Every instance is small enough to check in well under a
second.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .conjugate import slope_bounds
from .monops import CcInstance, OperatorGraph
from .numcore import GridFn, LatticeGrid, Polytope, RatLinMap
from .quadab import ConstrainedSetup, QuadSetup

__all__ = [
    "CorpusSetup",
    "CompositeCase",
    "HarnessCase",
    "grid",
    "auto_setup",
    "convex_corpus",
    "strong_corpus",
    "br_corpus",
    "cc_instances",
    "harness_corpus",
    "composite_corpus",
    "random_coupled_setup",
    "random_constrained_setup",
]

H = Fraction(1, 2)


def grid(lo, hi, step=1) -> LatticeGrid:
    """Box grid from scalar or per-axis bounds."""
    return LatticeGrid.from_bounds(lo, hi, step)


def _dual_radius(f: GridFn, axes) -> list[int]:
    out = []
    for ax, b in enumerate(slope_bounds(f)):
        if ax not in axes:
            continue
        r = 0 if b is None else max(abs(b[0]), abs(b[1]))
        out.append(int(math.ceil(r)) + 1)
    return out


def auto_setup(name: str, f: GridFn, g: GridFn, A: RatLinMap, B: RatLinMap, dx: int, dy: int,
               margin: int = 0, y_step=1) -> QuadSetup:
    """Setup with integer dual grids sized from the slopes of the data.

    The comparison window on ``X* x U*`` spans ``[-R, R]`` per axis with
    ``R`` exceeding the largest axis-adjacent slope of ``f`` on that axis
    (plus ``margin``).  ``Y*`` covers the slopes of ``g`` and twice the
    window radius of ``X*``, since an optimal ``y*`` may have to offset both
    ``x0*`` and a slope of ``f``; ``y_step`` refines it when ``A^T`` would
    otherwise reach only part of the ``X*`` lattice.  ``X*`` is
    widened by the reach of ``A^T`` over ``Y*`` and ``V*`` covers both the
    slopes of ``g`` and the image ``B^T U*``, so every lookup made for a
    window point stays on the grids.
    """
    rf = [v + margin for v in _dual_radius(f, range(f.dim))]
    rg = [v + margin for v in _dual_radius(g, range(g.dim))]
    rx, ru, ry, rv = rf[:dx], rf[dx:], rg[:dy], rg[dy:]
    ry = [max(r, 2 * max(rx)) for r in ry]
    reach_x = [sum(abs(A.entries[j][i]) * ry[j] for j in range(dy)) for i in range(dx)]
    reach_v = [sum(abs(B.entries[j][i]) * ru[j] for j in range(len(ru))) for i in range(len(rv))]

    def sym(rs, step=1):
        return grid([-int(math.ceil(v)) for v in rs], [int(math.ceil(v)) for v in rs], step)

    xs_full = sym([a + b for a, b in zip(rx, reach_x)])
    window = sym(rx).product(sym(ru))
    return QuadSetup(f, g, A, B, dx, dy, xs_full, sym(ru), sym(ry, y_step),
                     sym([max(a, b) for a, b in zip(rv, reach_v)]), name=name, window=window)


@dataclass(frozen=True)
class CorpusSetup:
    """A convex coupled setup with its expected behaviour.

    ``lattice_exact`` marks instances whose every intermediate value lies on
    the declared grids, where the duality gap must vanish exactly.
    """

    name: str
    setup: QuadSetup
    lattice_exact: bool = False


def _indicator(g: LatticeGrid, point) -> GridFn:
    idx = g.flat_index(point)
    vals = np.full(g.size, np.inf)
    vals[idx] = 0.0
    return GridFn(g, vals.reshape(g.shape), f"indicator of {tuple(point)}")


def _fn(g: LatticeGrid, fn: Callable[[np.ndarray], np.ndarray], label: str) -> GridFn:
    return GridFn.from_callable(g, fn, label)


def _box_indicator(g: LatticeGrid, lo, hi, label="box indicator") -> GridFn:
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    return _fn(g, lambda p: np.where(np.all((p >= lo) & (p <= hi), axis=1), 0.0, np.inf), label)


def _normal_cone_samples(g: LatticeGrid, lo, hi, ystar) -> GridFn:
    # I_[lo,hi](x) + x y* + sup_[lo,hi] (x* - y*)
    def fn(p):
        x, s = p[:, 0], p[:, 1]
        sup = np.maximum(lo * (s - ystar), hi * (s - ystar))
        return np.where((x >= lo) & (x <= hi), x * ystar + sup, np.inf)
    return _fn(g, fn, f"normal cone [{lo},{hi}] y*={ystar}")


def _inverse_normal_samples(g: LatticeGrid, y, lo, hi) -> GridFn:
    # sup_[lo,hi] (x - y) + I_[lo,hi](x*) + y x*
    def fn(p):
        x, s = p[:, 0], p[:, 1]
        sup = np.maximum(lo * (x - y), hi * (x - y))
        return np.where((s >= lo) & (s <= hi), sup + y * s, np.inf)
    return _fn(g, fn, f"inverse normal y={y} [{lo},{hi}]")


def convex_corpus() -> list[CorpusSetup]:
    """At least twenty convex coupled setups with qualification satisfied."""
    I1, I2 = RatLinMap.identity(1), RatLinMap.identity(2)
    g2 = grid([-2, -2], [2, 2])
    g3 = grid([-3, -3], [3, 3])
    out: list[CorpusSetup] = []

    def add(name, f, g, A=I1, B=I1, dx=1, dy=1, exact=False, margin=0, y_step=1):
        out.append(CorpusSetup(name, auto_setup(name, f, g, A, B, dx, dy, margin, y_step), exact))

    # lattice-exact point indicators with identity maps
    add("indicator_origin", _indicator(g2, (0, 0)), _indicator(g2, (0, 0)), exact=True)
    add("indicator_shifted", _indicator(g2, (1, -1)), _indicator(g2, (1, 2)), exact=True)
    add("indicator_corner", _indicator(g2, (-2, 1)), _indicator(g2, (-2, -1)), exact=True)
    add("indicator_2d", _indicator(grid([-1] * 4, [1] * 4), (1, 0, -1, 1)),
        _indicator(grid([-1] * 4, [1] * 4), (1, 0, 1, 0)), I2, I2, 2, 2, exact=True)
    # quadratics
    sq = lambda p: p[:, 0] ** 2 + p[:, 1] ** 2  # noqa: E731
    add("quadratic_id_maps", _fn(g2, sq, "x^2+u^2"), _fn(g2, sq, "y^2+v^2"))
    add("quadratic_coupled", _fn(g2, lambda p: (p[:, 0] - p[:, 1]) ** 2 + p[:, 0] ** 2, "(x-u)^2+x^2"),
        _fn(g2, lambda p: p[:, 0] ** 2 + p[:, 0] * p[:, 1] + p[:, 1] ** 2, "y^2+yv+v^2"))
    add("quadratic_scaled_map", _fn(g2, sq, "x^2+u^2"), _fn(grid([-4, -2], [4, 2]), sq, "y^2+v^2"),
        A=RatLinMap.scalar(2))
    add("quadratic_neg_map", _fn(g2, sq, "x^2+u^2"), _fn(g2, lambda p: 2 * p[:, 0] ** 2 + p[:, 1] ** 2,
                                                        "2y^2+v^2"),
        A=RatLinMap.scalar(-1), B=RatLinMap.scalar(-1))
    add("quadratic_2to1", _fn(grid([-1] * 3, [1] * 3), lambda p: (p ** 2).sum(axis=1), "|x|^2+u^2"),
        _fn(grid([-2, -2], [2, 2]), sq, "y^2+v^2"),
        A=RatLinMap(((1, 1),)), B=I1, dx=2, dy=1)
    add("quadratic_1to2", _fn(g2, sq, "x^2+u^2"),
        _fn(grid([-1] * 4, [1] * 4), lambda p: (p ** 2).sum(axis=1), "|y|^2+|v|^2"),
        A=RatLinMap(((1,), (0,))), B=RatLinMap(((1, 1),)), dx=1, dy=2)
    # absolute values and boxes
    ab = lambda p: np.abs(p[:, 0]) + np.abs(p[:, 1])  # noqa: E731
    add("abs_sum", _fn(g3, ab, "|x|+|u|"), _fn(g3, ab, "|y|+|v|"))
    add("abs_box", _fn(g2, ab, "|x|+|u|"), _box_indicator(g2, (-1, -1), (1, 1)))
    add("box_box", _box_indicator(g2, (-1, 0), (1, 1)), _box_indicator(g2, (-1, -1), (0, 1)))
    add("box_quadratic", _box_indicator(g3, (-2, -2), (1, 2)), _fn(g3, sq, "y^2+v^2"))
    # max-affine
    add("max_affine", _fn(g2, lambda p: np.maximum.reduce([p[:, 0] + p[:, 1], -p[:, 0], p[:, 1] - 1]),
                          "max(x+u, -x, u-1)"),
        _fn(g2, sq, "y^2+v^2"))
    add("max_affine_pair", _fn(g2, lambda p: np.maximum(p[:, 0], -p[:, 1]), "max(x, -u)"),
        _fn(g2, lambda p: np.maximum.reduce([p[:, 0], -p[:, 0], 2 * p[:, 1] - 1]), "max(y, -y, 2v-1)"))
    add("max_affine_scaled", _fn(g2, lambda p: np.maximum(p[:, 0] - p[:, 1], p[:, 1]), "max(x-u, u)"),
        _fn(grid([-4, -2], [4, 2]), ab, "|y|+|v|"), A=RatLinMap.scalar(2), y_step=H)
    # samples of the normal-cone and inverse-normal representatives
    add("normal_cone_samples", _normal_cone_samples(g2, -1, 1, 0), _fn(g2, sq, "y^2+v^2"))
    add("normal_cone_pair", _normal_cone_samples(g2, -1, 1, 1), _normal_cone_samples(g2, 0, 1, 0))
    add("inverse_normal_samples", _inverse_normal_samples(g2, 0, -1, 1), _fn(g2, ab, "|y|+|v|"))
    add("inverse_normal_pair", _inverse_normal_samples(g2, 1, -1, 1),
        _inverse_normal_samples(g2, -1, 0, 1))
    add("mixed_repr_samples", _normal_cone_samples(g2, -1, 1, 0), _inverse_normal_samples(g2, 0, -1, 1),
        A=RatLinMap.scalar(-1))
    return out


# ---------------------------------------------------------------- representatives


def strong_corpus(step=Fraction(1, 8)) -> list:
    """Strongly representative functions on ``step``-spaced grids.

    Mixes separable instances (quadratic, absolute value, box indicator,
    max-affine), the normal-cone and inverse-normal closed forms, and one
    sampled function.
    """
    from .reprfn import (SampledRepr, inverse_normal_repr, normal_cone_repr,
                         separable_repr)

    step = Fraction(step)
    E = grid(-1, 1, step)
    Es = grid(Fraction(-3, 2), Fraction(3, 2), step)
    E2 = grid([-H, -H], [H, H], step)
    Es2 = grid([-1, -1], [1, 1], step)
    out = []
    half_sq = _fn(E, lambda p: 0.5 * p[:, 0] ** 2, "x^2/2")
    out.append(separable_repr(half_sq, Es))
    out.append(separable_repr(_fn(E, lambda p: np.abs(p[:, 0]), "|x|"), Es))
    out.append(separable_repr(_box_indicator(E, [0], [1], "indicator [0,1]"), Es))
    out.append(separable_repr(_fn(E, lambda p: np.maximum(p[:, 0], -p[:, 0] / 2), "max(x, -x/2)"), Es))
    out.append(separable_repr(_fn(E2, lambda p: 0.5 * (p ** 2).sum(axis=1), "|x|^2/2"), Es2))
    out.append(normal_cone_repr(Polytope.interval(-H, H), [0], E, Es))
    out.append(normal_cone_repr(Polytope.interval(0, 1), [H], E, Es))
    out.append(normal_cone_repr(Polytope.point([0]), [0], E, Es))
    out.append(normal_cone_repr(Polytope.box([-Fraction(1, 4)] * 2, [Fraction(1, 4)] * 2), [0, 0], E2, Es2))
    out.append(inverse_normal_repr([0], Polytope.interval(-1, 1), E, Es))
    out.append(inverse_normal_repr([H], Polytope.interval(-H, 1), E, Es))
    out.append(inverse_normal_repr([0, 0], Polytope(((0, 0), (H, 0), (0, H))), E2, Es2))
    sampled = separable_repr(half_sq, Es).sample()
    out.append(SampledRepr(sampled, 1, "sampled x^2/2 + (x^2/2)*"))
    return out


def br_corpus() -> list:
    """Instances for the approximate-graph property; grid step 1/8."""
    return strong_corpus(Fraction(1, 8))


# ---------------------------------------------------------------- cc harnesses


def cc_instances(dim: int = 1) -> list[CcInstance]:
    """Star and space instances on a small set of points and polytopes."""
    if dim == 1:
        pts = [(-2,), (-1,), (0,), (H,), (1,), (2,)]
        polys = [Polytope.interval(-1, 1), Polytope.interval(0, 1), Polytope.interval(H, 1),
                 Polytope.interval(-2, -1), Polytope.point([0]), Polytope.interval(2, 3)]
    elif dim == 2:
        pts = [(0, 0), (1, -1), (-1, H)]
        polys = [Polytope.box([-1, -1], [1, 1]), Polytope(((0, 0), (1, 0), (0, 1))),
                 Polytope.point([1, 1]), Polytope.box([H, -1], [1, 0])]
    else:
        raise ValueError("instance families exist for dimensions 1 and 2")
    out = [CcInstance.star(p, C) for p in pts for C in polys]
    out += [CcInstance.space(C, p) for p in pts for C in polys]
    return out


@dataclass(frozen=True)
class HarnessCase:
    """Graph, sampling grids and candidate extent for a cc harness run.

    ``source`` is the strongly representative function whose graph is
    ``graph``, when there is one.
    """

    name: str
    graph: OperatorGraph
    e_grid: LatticeGrid
    es_grid: LatticeGrid
    extent: tuple[LatticeGrid, LatticeGrid]
    instances: tuple[CcInstance, ...]
    source: object = None


def harness_corpus() -> list[HarnessCase]:
    """Grid-maximal monotone graphs with instance families.

    The graphs are sampled on grids twice as wide as the candidate extent so
    that truncation at the grid edges does not affect the extent.  The
    identity graph on an integer lattice is never grid-maximal and exercises
    the skip path.
    """
    from .reprfn import graph_of, inverse_normal_repr, normal_cone_repr, separable_repr

    Ew, Esw = grid(-6, 6), grid(-6, 6, H)
    E, Es = grid(-3, 3), grid(-3, 3, H)
    fam = tuple(cc_instances(1))
    sources = [separable_repr(_fn(Ew, fn, label), Esw) for label, fn in [
        ("x^2/2", lambda p: 0.5 * p[:, 0] ** 2), ("|x|", lambda p: np.abs(p[:, 0])),
        ("x", lambda p: p[:, 0]), ("max(x, -x/2)", lambda p: np.maximum(p[:, 0], -p[:, 0] / 2))]]
    sources.append(inverse_normal_repr([0], Polytope.interval(-1, 1), Ew, Esw))
    sources.append(normal_cone_repr(Polytope.interval(-1, 1), [H], Ew, Esw))
    out = [HarnessCase(f"graph of {f.label}", graph_of(f), Ew, Esw, (E, Es), fam, f) for f in sources]
    ident = OperatorGraph.from_pairs([((x,), (x,)) for x in range(-6, 7)])
    out.append(HarnessCase("identity", ident, Ew, grid(-6, 6), (E, grid(-3, 3)), fam))
    E2w, Es2w = grid([-3, -3], [3, 3]), grid([-3, -3], [3, 3], H)
    q2 = separable_repr(_fn(E2w, lambda p: 0.5 * (p ** 2).sum(axis=1), "|x|^2/2"), Es2w)
    out.append(HarnessCase("graph of separable |x|^2/2 (2d)", graph_of(q2), E2w, Es2w,
                           (grid([-1, -1], [1, 1]), grid([-1, -1], [1, 1], H)), tuple(cc_instances(2)), q2))
    return out


# ---------------------------------------------------------------- composites


@dataclass(frozen=True)
class CompositeCase:
    name: str
    f: object
    g: object
    M: RatLinMap
    variant: str
    expect: str = "verified"


def composite_corpus() -> list[CompositeCase]:
    """Pairs of strongly representative functions for the composite check."""
    from .reprfn import inverse_normal_repr, normal_cone_repr, separable_repr

    E, Es = grid(-3, 3), grid(-3, 3, H)
    I1 = RatLinMap.identity(1)
    q = separable_repr(_fn(E, lambda p: 0.5 * p[:, 0] ** 2, "x^2/2"), Es)
    a = separable_repr(_fn(E, lambda p: np.abs(p[:, 0]), "|x|"), Es)
    nc = normal_cone_repr(Polytope.interval(-1, 1), [0], E, Es)
    inv = inverse_normal_repr([0], Polytope.interval(-1, 1), E, Es)
    left = normal_cone_repr(Polytope.point([-1]), [0], E, Es)
    right = normal_cone_repr(Polytope.point([1]), [0], E, Es)
    out = []
    for v in "abc":
        out.append(CompositeCase(f"quadratic+quadratic ({v})", q, q, I1, v))
        out.append(CompositeCase(f"quadratic+normal cone ({v})", q, nc, I1, v))
        out.append(CompositeCase(f"abs+inverse normal ({v})", a, inv, I1, v))
        out.append(CompositeCase(f"abs+quadratic ({v})", a, q, RatLinMap.scalar(-1), v))
    out.append(CompositeCase("disjoint point domains (a)", left, right, I1, "a", "inapplicable"))
    return out


# ---------------------------------------------------------------- random setups


def _random_values(rng: np.random.Generator, g: LatticeGrid, inf_rate: float) -> GridFn:
    # small rationals (halves) with a +inf region; finite at the grid origin
    vals = rng.integers(-6, 7, size=g.size) / 2.0
    vals[rng.random(g.size) < inf_rate] = np.inf
    zero = g.flat_index(tuple(0 for _ in range(g.dim)))
    vals[zero] = rng.integers(-6, 7) / 2.0
    return GridFn(g, vals.reshape(g.shape), "random")


def random_coupled_setup(rng: np.random.Generator, inf_rate: float = 0.25) -> QuadSetup:
    """A random, typically nonconvex, coupled setup with integer maps.

    Block dimensions are 1 or 2 with at most three axes per function; the
    ``X`` and ``Y`` grids share a step of 1 or 1/2 so that integer maps are
    always lattice compatible.  Both functions are finite at the origin,
    which keeps the inf-convolution proper.
    """
    while True:
        dx, du, dy, dv = (int(v) for v in rng.integers(1, 3, size=4))
        if dx + du <= 3 and dy + dv <= 3:
            break
    s = H if rng.random() < 0.3 else Fraction(1)
    r = lambda: int(rng.integers(1, 3))  # noqa: E731
    X = grid([-r() * s for _ in range(dx)], [r() * s for _ in range(dx)], s)
    Y = grid([-2 * s] * dy, [2 * s] * dy, s)
    U = grid([-r() for _ in range(du)], [r() for _ in range(du)])
    V = grid([-r() for _ in range(dv)], [r() for _ in range(dv)])
    A = RatLinMap(tuple(tuple(int(v) for v in rng.integers(-1, 3, size=dx)) for _ in range(dy)))
    B = RatLinMap(tuple(tuple(int(v) for v in rng.integers(-1, 2, size=dv)) for _ in range(du)))
    f = _random_values(rng, X.product(U), inf_rate)
    g = _random_values(rng, Y.product(V), inf_rate)
    d = lambda k: grid([-3] * k, [3] * k)  # noqa: E731
    return QuadSetup(f, g, A, B, dx, dy, d(dx), d(du), d(dy), d(dv), name="random")


def random_constrained_setup(rng: np.random.Generator, inf_rate: float = 0.25) -> ConstrainedSetup:
    """A random, typically nonconvex, constrained setup with integer maps.

    ``k`` lives on ``W x T`` with at most three axes and is finite at the
    origin, so ``h(0, 0)`` is finite.  ``X`` and ``W`` share a step of 1 or
    1/2, keeping the integer ``C`` lattice compatible.
    """
    while True:
        dx, du, dw, dt = (int(v) for v in rng.integers(1, 3, size=4))
        if dw + dt <= 3:
            break
    s = H if rng.random() < 0.3 else Fraction(1)
    r = lambda: int(rng.integers(1, 3))  # noqa: E731
    X = grid([-r() * s for _ in range(dx)], [r() * s for _ in range(dx)], s)
    W = grid([-2 * s] * dw, [2 * s] * dw, s)
    T = grid([-r() for _ in range(dt)], [r() for _ in range(dt)])
    U = grid([-r() for _ in range(du)], [r() for _ in range(du)])
    C = RatLinMap(tuple(tuple(int(v) for v in rng.integers(-1, 3, size=dx)) for _ in range(dw)))
    D = RatLinMap(tuple(tuple(int(v) for v in rng.integers(-1, 2, size=dt)) for _ in range(du)))
    k = _random_values(rng, W.product(T), inf_rate)
    d = lambda n: grid([-3] * n, [3] * n)  # noqa: E731
    return ConstrainedSetup(k, C, D, dw, X, U, d(dx), d(du), d(dw), d(dt), name="random")
