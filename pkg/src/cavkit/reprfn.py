"""Representative functions on ``E x E*`` and their equality graphs.

A function ``f`` on ``E x E*`` is representative when it is proper, convex,
closed and dominates the pairing ``<x, x*>``; it is strongly representative
when its conjugate also dominates the pairing on ``E* x E``.  In finite
dimension ``E**`` is identified with ``E``.

Closed-form kinds evaluate exactly in rational arithmetic.  Sampled kinds
carry float values on the product grid and are compared with tolerances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .conjugate import _check_bracket, _envelope_1d, _envelope_nd, conjugate_fast, is_closed, max_slope
from .monops import OperatorGraph
from .numcore import GridFn, ImproperError, LatticeGrid, Polytope, frac_vec

__all__ = [
    "ReprFn",
    "SampledRepr",
    "NormalConeRepr",
    "InverseNormalRepr",
    "SeparableRepr",
    "AtRepr",
    "AtTransform",
    "ReprCheck",
    "GraphComparison",
    "FormulaComparison",
    "PropertyCheck",
    "BRResult",
    "pairing",
    "normal_cone_repr",
    "inverse_normal_repr",
    "separable_repr",
    "is_representative",
    "is_strongly_representative",
    "at_transform",
    "graph_of",
    "graph_invariance_check",
    "conjugate_formula_check",
    "normal_cone_property_check",
    "inverse_normal_property_check",
    "br_check",
    "BRSweep",
    "br_sweep",
]

_EPS = float(np.finfo(float).eps)
Inf = math.inf


def pairing(x: Sequence, xs: Sequence) -> Fraction:
    """Exact duality pairing of two rational vectors."""
    return sum((a * b for a, b in zip(frac_vec(x), frac_vec(xs))), Fraction(0))


def _float_pairing(grid: LatticeGrid, n: int) -> np.ndarray:
    pts = grid.points()
    return np.einsum("ij,ij->i", pts[:, :n], pts[:, n:]).reshape(grid.shape)


class ReprFn:
    """Base class for functions on ``E x E*``.

    Subclasses set ``e_grid`` and ``es_grid`` (the paired grids for ``E``
    and ``E*``) and implement :meth:`value`.  Closed-form kinds also
    implement :meth:`conjugate_value`.
    """

    kind: str = "abstract"
    exact: bool = False
    e_grid: LatticeGrid
    es_grid: LatticeGrid
    label: str = ""

    @property
    def n(self) -> int:
        return self.e_grid.dim

    @cached_property
    def grid(self) -> LatticeGrid:
        return self.e_grid.product(self.es_grid)

    @cached_property
    def dual_grid(self) -> LatticeGrid:
        """Product grid ``E* x E`` on which the conjugate is examined."""
        return self.es_grid.product(self.e_grid)

    def value(self, x, xs):
        """``f(x, x*)`` as a Fraction (exact kinds), float, or ``math.inf``."""
        raise NotImplementedError

    def conjugate_value(self, us, u):
        """``f*(u*, u)`` in closed form; only for exact kinds."""
        raise NotImplementedError(f"{self.kind} has no closed-form conjugate")

    def __call__(self, x, xs):
        return self.value(x, xs)

    @cached_property
    def _sampled(self) -> GridFn:
        n = self.n
        vals = [float(self.value(p[:n], p[n:])) for p in self.grid.exact_points()]
        return GridFn(self.grid, np.array(vals).reshape(self.grid.shape), self.label or self.kind)

    def sample(self) -> GridFn:
        """Values on the product grid ``E x E*``."""
        return self._sampled

    def to_dict(self) -> dict:
        return {"kind": self.kind, "label": self.label}


class SampledRepr(ReprFn):
    """A function given by samples on ``E x E*``; the first ``n`` axes are E."""

    kind = "sampled"

    def __init__(self, values: GridFn, n: int, label: str = ""):
        if values.dim != 2 * n:
            raise ValueError(f"sampled function has {values.dim} axes, expected {2 * n}")
        self.values = values
        self.e_grid = values.grid.sub(range(n))
        self.es_grid = values.grid.sub(range(n, 2 * n))
        self.label = label or values.label

    @cached_property
    def grid(self) -> LatticeGrid:
        return self.values.grid

    def value(self, x, xs):
        v = self.values.at(tuple(frac_vec(x)) + tuple(frac_vec(xs)))
        return Inf if v.is_inf else Fraction(v.value)

    def sample(self) -> GridFn:
        return self.values


class _PolyIndicator:
    """Cached exact membership test ``x in K``."""

    def __init__(self, K: Polytope):
        self.K = K
        self._memo: dict = {}

    def __call__(self, x) -> bool:
        x = frac_vec(x)
        hit = self._memo.get(x)
        if hit is None:
            hit = self._memo[x] = self.K.contains(x)
        return hit


class NormalConeRepr(ReprFn):
    """``h(x, x*) = I_K(x) + <x, y*> + sup <K, x* - y*>`` with ``K`` in E.

    Its equality graph is the shifted normal cone multifunction
    ``N_{K,y*}``; ``h`` is strongly representative and ``h^@ = h``.
    """

    kind = "normal_cone"
    exact = True

    def __init__(self, K: Polytope, ystar, e_grid: LatticeGrid, es_grid: LatticeGrid, label: str = ""):
        self.K, self.ystar = K, frac_vec(ystar)
        if len(self.ystar) != K.dim or e_grid.dim != K.dim or es_grid.dim != K.dim:
            raise ValueError("K, y* and the grids must share a dimension")
        self.e_grid, self.es_grid = e_grid, es_grid
        self.label = label or "normal_cone"
        self._inK = _PolyIndicator(K)

    def value(self, x, xs):
        if not self._inK(x):
            return Inf
        d = tuple(a - b for a, b in zip(frac_vec(xs), self.ystar))
        return pairing(x, self.ystar) + self.K.support(d)

    def conjugate_value(self, us, u):
        if not self._inK(u):
            return Inf
        d = tuple(a - b for a, b in zip(frac_vec(us), self.ystar))
        return self.K.support(d) + pairing(self.ystar, u)

    def multifunction(self, x) -> list[tuple[Fraction, ...]]:
        """Grid values ``x*`` with ``h(x, x*) = <x, x*>``."""
        return [s for s in self.es_grid.exact_points() if self.value(x, s) == pairing(x, s)]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "K": [[str(c) for c in v] for v in self.K.vertices],
                "ystar": [str(c) for c in self.ystar]}


class InverseNormalRepr(ReprFn):
    """``g(x, x*) = sup <x - y, K> + I_K(x*) + <y, x*>`` with ``K`` in E*.

    The mirror image of :class:`NormalConeRepr`: its equality graph
    ``M_{y,K}`` is the inverse of a shifted normal cone; ``g^@ = g``.
    """

    kind = "inverse_normal"
    exact = True

    def __init__(self, y, K: Polytope, e_grid: LatticeGrid, es_grid: LatticeGrid, label: str = ""):
        self.y, self.K = frac_vec(y), K
        if len(self.y) != K.dim or e_grid.dim != K.dim or es_grid.dim != K.dim:
            raise ValueError("y, K and the grids must share a dimension")
        self.e_grid, self.es_grid = e_grid, es_grid
        self.label = label or "inverse_normal"
        self._inK = _PolyIndicator(K)

    def value(self, x, xs):
        if not self._inK(xs):
            return Inf
        d = tuple(a - b for a, b in zip(frac_vec(x), self.y))
        return self.K.support(d) + pairing(self.y, xs)

    def conjugate_value(self, us, u):
        if not self._inK(us):
            return Inf
        d = tuple(a - b for a, b in zip(frac_vec(u), self.y))
        return pairing(self.y, us) + self.K.support(d)

    def multifunction(self, x) -> list[tuple[Fraction, ...]]:
        return [s for s in self.es_grid.exact_points() if self.value(x, s) == pairing(x, s)]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "y": [str(c) for c in self.y],
                "K": [[str(c) for c in v] for v in self.K.vertices]}


class SeparableRepr(ReprFn):
    """``f(x, x*) = phi(x) + phi*(x*)`` for a convex sampled ``phi``.

    ``phi`` is ``+inf`` off its grid, so ``phi*`` is an exact finite
    maximum.  The conjugate of ``f`` is ``phi*(u*) + phi**(u)`` where
    ``phi**`` is the lower convex envelope, equal to ``phi`` on the grid.
    """

    kind = "separable"
    exact = True

    def __init__(self, phi: GridFn, es_grid: LatticeGrid, label: str = ""):
        if es_grid.dim != phi.dim:
            raise ValueError("phi and the dual grid must share a dimension")
        if not is_closed(phi, tol=0.0):
            raise ValueError(f"{phi.label or 'phi'} is not convex on its grid")
        self.phi = phi
        self.e_grid, self.es_grid = phi.grid, es_grid
        self.label = label or f"separable {phi.label}".strip()
        m = phi.dom_mask.ravel()
        pts = list(phi.grid.exact_points())
        self._dom = [(pts[i], Fraction(float(phi.values.flat[i]))) for i in np.flatnonzero(m)]
        env = _envelope_1d(phi) if phi.dim == 1 else _envelope_nd(phi)
        self._env = {p: v for p, v in zip(pts, env)}
        self._phival = {p: v for p, v in self._dom}
        self._star: dict = {}

    def phi_value(self, x):
        return self._phival.get(frac_vec(x), Inf)

    def phi_star(self, s) -> Fraction:
        s = frac_vec(s)
        hit = self._star.get(s)
        if hit is None:
            hit = self._star[s] = max(pairing(p, s) - v for p, v in self._dom)
        return hit

    def value(self, x, xs):
        px = self.phi_value(x)
        return Inf if px == Inf else px + self.phi_star(xs)

    def conjugate_value(self, us, u):
        u = frac_vec(u)
        if u not in self._env:
            raise ValueError(f"{u} is not a point of the primal grid")
        e = self._env[u]
        return Inf if e is None else self.phi_star(us) + e

    def to_dict(self) -> dict:
        return {"kind": self.kind, "phi": self.phi.label}


class AtRepr(ReprFn):
    """``f^@(x, x*) = f*(x*, x)`` for an exact strongly representative ``f``."""

    kind = "at"
    exact = True

    def __init__(self, source: ReprFn):
        if not source.exact:
            raise ValueError("AtRepr needs a closed-form source")
        self.source = source
        self.e_grid, self.es_grid = source.e_grid, source.es_grid
        self.label = f"{source.label}^@"

    def value(self, x, xs):
        return self.source.conjugate_value(xs, x)

    def conjugate_value(self, us, u):
        # (f^@)^* (u*, u) = f**(u, u*) = f(u, u*) for closed f
        return self.source.value(u, us)


def normal_cone_repr(K: Polytope, ystar, e_grid: LatticeGrid, es_grid: LatticeGrid) -> NormalConeRepr:
    """Representative of the shifted normal cone ``N_{K,y*}``."""
    return NormalConeRepr(K, ystar, e_grid, es_grid)


def inverse_normal_repr(y, K: Polytope, e_grid: LatticeGrid, es_grid: LatticeGrid) -> InverseNormalRepr:
    """Representative of ``M_{y,K}``, the mirror of :func:`normal_cone_repr`."""
    return InverseNormalRepr(y, K, e_grid, es_grid)


def separable_repr(phi: GridFn, es_grid: LatticeGrid) -> SeparableRepr:
    """Strongly representative ``phi(x) + phi*(x*)``; raises on nonconvex ``phi``."""
    return SeparableRepr(phi, es_grid)


# ---------------------------------------------------------------- checks


@dataclass(frozen=True)
class ReprCheck:
    """Outcome of a representativity test.

    ``worst_point`` is the grid point minimising ``value - pairing`` and
    ``worst_gap`` that minimum (negative when the test fails).
    """

    ok: bool
    worst_point: tuple | None
    worst_gap: float
    closed: bool = True
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _gap_array(f: ReprFn) -> tuple[np.ndarray, np.ndarray]:
    s = f.sample()
    pair = _float_pairing(f.grid, f.n)
    return s.values - pair, pair


def _split(point, n):
    p = tuple(point)
    return p[:n], p[n:]


def _exact_min_gap(fn, points, n):
    worst, wgap = None, None
    for p in points:
        v = fn(p[:n], p[n:])
        if v == Inf:
            continue
        g = v - pairing(p[:n], p[n:])
        if wgap is None or g < wgap:
            worst, wgap = p, g
    return worst, wgap


def is_representative(f: ReprFn, tol: float | None = None) -> ReprCheck:
    """Check ``f >= <x, x*>`` on the product grid, plus closedness.

    Exact kinds are compared exactly (``tol`` defaults to 0); sampled kinds
    use ``4 eps max(|f|, |<x,x*>|, 1)`` by default and must also equal their
    closure on the grid.
    """
    n = f.n
    if f.exact:
        worst, wgap = _exact_min_gap(f.value, f.grid.exact_points(), n)
        if worst is None:
            raise ImproperError(f"{f.label} is identically +inf on the grid")
        t = Fraction(0) if tol is None else Fraction(tol)
        ok = wgap >= -t
        return ReprCheck(bool(ok), _split(worst, n), float(wgap), True,
                         "" if ok else "value below the pairing")
    gap, pair = _gap_array(f)
    vals = f.sample().values
    t = 4 * _EPS * np.maximum(np.maximum(np.abs(np.where(np.isfinite(vals), vals, 0)), np.abs(pair)), 1.0) \
        if tol is None else np.full(gap.shape, float(tol))
    i = int(np.argmin(gap))
    worst = f.grid.exact_point(i)
    below = bool((gap < -t).any())
    closed = is_closed(f.sample())
    reason = "value below the pairing" if below else ("" if closed else "not convex-closed on the grid")
    return ReprCheck(not below and closed, _split(worst, n), float(gap.flat[i]), closed, reason)


def is_strongly_representative(f: ReprFn, tol: float | None = None) -> ReprCheck:
    """Check ``f*(u*, u) >= <u, u*>`` on ``E* x E``.

    Exact kinds use their conjugate formula.  Sampled kinds conjugate onto
    the swapped product grid.  The grid conjugate is a lower bound for the
    true one, so a pass is conclusive; a failure is reported only when the
    dual grid brackets the slopes of ``f`` and raises
    :class:`~cavkit.conjugate.DualGridError` otherwise.
    """
    n = f.n
    if f.exact:
        worst, wgap = _exact_min_gap(f.conjugate_value, f.dual_grid.exact_points(), n)
        if worst is None:
            raise ImproperError(f"conjugate of {f.label} is identically +inf on the grid")
        t = Fraction(0) if tol is None else Fraction(tol)
        ok = wgap >= -t
        return ReprCheck(bool(ok), _split(worst, n), float(wgap), True,
                         "" if ok else "conjugate below the pairing")
    s = f.sample()
    fs = conjugate_fast(s, f.dual_grid)
    pair = _float_pairing(f.dual_grid, n)
    gap = fs.values - pair
    t = 4 * _EPS * np.maximum(np.maximum(np.abs(np.where(np.isfinite(fs.values), fs.values, 0)),
                                         np.abs(pair)), 1.0) if tol is None else float(tol)
    i = int(np.argmin(gap))
    ok = not bool((gap < -t).any())
    if not ok:
        # a failure is only conclusive when the dual grid brackets the slopes
        _check_bracket(s, f.dual_grid)
    return ReprCheck(ok, _split(f.dual_grid.exact_point(i), n), float(gap.flat[i]), True,
                     "" if ok else "conjugate below the pairing")


@dataclass(frozen=True)
class AtTransform:
    """``f^@`` sampled on the ``E x E*`` grid of its source.

    ``repr`` is the transform as a :class:`ReprFn`: closed form for exact
    sources, sampled otherwise.
    """

    source: ReprFn
    values: GridFn
    repr: ReprFn


def at_transform(f: ReprFn) -> AtTransform:
    """The ``@`` transform ``f^@(x, x*) = f*(x*, x)``."""
    if f.exact:
        r = AtRepr(f)
        return AtTransform(f, r.sample(), r)
    s = f.sample()
    _check_bracket(s, f.dual_grid)
    vals = conjugate_fast(s, f.dual_grid).transpose_blocks(f.n).relabel(f"{f.label}^@")
    return AtTransform(f, vals, SampledRepr(vals, f.n))


def graph_of(f: ReprFn, tol: float | None = None) -> OperatorGraph:
    """Equality set ``{(x, x*): f(x, x*) = <x, x*>}`` on the grid.

    Exact kinds test equality exactly unless ``tol`` is given.  Sampled kinds
    accept ``f - pairing <= tol`` with the default
    ``4 eps max(|f|, |<x,x*>|, 1)``.
    """
    n = f.n
    if f.exact and tol is None:
        pairs = []
        for p in f.grid.exact_points():
            v = f.value(p[:n], p[n:])
            if v != Inf and v == pairing(p[:n], p[n:]):
                pairs.append((p[:n], p[n:]))
        return OperatorGraph(frozenset(pairs), n)
    gap, pair = _gap_array(f)
    vals = f.sample().values
    if tol is None:
        t = 4 * _EPS * np.maximum(np.maximum(np.abs(np.where(np.isfinite(vals), vals, 0)), np.abs(pair)), 1.0)
    else:
        t = float(tol)
    hits = np.flatnonzero((gap <= t).ravel())
    pairs = []
    for i in hits:
        p = f.grid.exact_point(int(i))
        pairs.append((p[:n], p[n:]))
    return OperatorGraph(frozenset(pairs), n)


@dataclass(frozen=True)
class GraphComparison:
    equal: bool
    graph: OperatorGraph
    other: OperatorGraph
    only_first: tuple = ()
    only_second: tuple = ()

    def __bool__(self) -> bool:
        return self.equal


def graph_invariance_check(f: ReprFn, tol: float | None = None) -> GraphComparison:
    """Compare the graphs of ``f`` and ``f^@`` as sets."""
    a = graph_of(f, tol)
    b = graph_of(at_transform(f).repr, tol)
    return GraphComparison(a == b, a, b, tuple(sorted(a.pairs - b.pairs)), tuple(sorted(b.pairs - a.pairs)))


@dataclass(frozen=True)
class FormulaComparison:
    """Closed-form conjugate versus grid conjugation of the samples.

    Only points where the closed form is finite are compared: the grid
    conjugate of a sampled function is finite everywhere.
    """

    max_gap: float
    tolerance: float
    worst_point: tuple | None
    compared: int
    lower_bound_ok: bool

    @property
    def ok(self) -> bool:
        return self.lower_bound_ok and self.max_gap <= self.tolerance


def conjugate_formula_check(f: ReprFn) -> FormulaComparison:
    """Compare ``f.conjugate_value`` with grid conjugation on ``E* x E``.

    The grid sup never exceeds the continuum sup, so the formula must be
    an upper bound (checked up to rounding), and the gap must not exceed
    ``(L + 1) delta`` with ``L`` the largest axis slope of the samples and
    ``delta`` the largest grid step.
    """
    if not f.exact:
        raise ValueError("conjugate_formula_check needs a closed-form function")
    s = f.sample()
    grid_conj = conjugate_fast(s, f.dual_grid).values.ravel()
    n = f.n
    worst, wgap, count, lb_ok = None, 0.0, 0, True
    for i, p in enumerate(f.dual_grid.exact_points()):
        v = f.conjugate_value(p[:n], p[n:])
        if v == Inf:
            continue
        count += 1
        g = float(v) - float(grid_conj[i])
        if g < -8 * _EPS * max(abs(float(v)), 1.0):
            lb_ok = False
        if g > wgap or worst is None:
            worst, wgap = _split(p, n), max(g, wgap)
    delta = float(max(f.e_grid.max_step, f.es_grid.max_step))
    tol = (max_slope(s) + 1.0) * delta
    return FormulaComparison(wgap, tol, worst, count, lb_ok)


@dataclass(frozen=True)
class PropertyCheck:
    ok: bool
    checked: int
    violation: tuple | None = None


def _k_points(K: Polytope, grid: LatticeGrid) -> list[tuple[Fraction, ...]]:
    pts = list(K.vertices)
    pts += [p for p in grid.exact_points() if K.contains(p) and p not in pts]
    return pts


def normal_cone_property_check(h: NormalConeRepr) -> PropertyCheck:
    """Every graph pair ``(v, s*)`` of ``N_{K,y*}`` has ``v in K`` and
    ``<v - u, s* - y*> >= 0`` for all ``u in K``.

    ``u`` ranges over the vertices of ``K`` and the grid points inside it,
    which suffices because the expression is affine in ``u``.
    """
    us = _k_points(h.K, h.e_grid)
    count = 0
    for v, s in graph_of(h):
        if not h.K.contains(v):
            return PropertyCheck(False, count, (v, s, None))
        d = tuple(a - b for a, b in zip(s, h.ystar))
        for u in us:
            count += 1
            if pairing(tuple(a - b for a, b in zip(v, u)), d) < 0:
                return PropertyCheck(False, count, (v, s, u))
    return PropertyCheck(True, count)


def inverse_normal_property_check(g: InverseNormalRepr) -> PropertyCheck:
    """Every graph pair ``(s, w*)`` of ``M_{y,K}`` has ``w* in K`` and
    ``<s - y, w* - v*> >= 0`` for all ``v* in K``."""
    vs = _k_points(g.K, g.es_grid)
    count = 0
    for s, w in graph_of(g):
        if not g.K.contains(w):
            return PropertyCheck(False, count, (s, w, None))
        d = tuple(a - b for a, b in zip(s, g.y))
        for v in vs:
            count += 1
            if pairing(d, tuple(a - b for a, b in zip(w, v))) < 0:
                return PropertyCheck(False, count, (s, w, v))
    return PropertyCheck(True, count)


# ---------------------------------------------------------------- BR property


@dataclass(frozen=True)
class BRResult:
    """Outcome of :func:`br_check`.

    ``status`` is ``witness`` (a graph pair inside both open balls),
    ``vacuous`` (the gap is not below ``alpha beta``), ``near_miss`` (only
    a pair within ``alpha + delta`` and ``beta + delta``) or ``fail``.
    """

    status: str
    gap: float
    witness: tuple | None = None
    caveat: str = ""
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return self.status in ("witness", "vacuous")


def _sqnorm(a, b) -> Fraction:
    return sum(((x - y) ** 2 for x, y in zip(a, b)), Fraction(0))


def br_check(f: ReprFn, alpha, beta, point, tol: float | None = None,
             graph: OperatorGraph | None = None) -> BRResult:
    """Search the graph for a pair near a point with small pairing gap.

    If ``f(x, x*) < <x, x*> + alpha beta`` some graph pair ``(y, y*)``
    should satisfy ``|y - x| < alpha`` and ``|y* - x*| < beta``
    (Euclidean norms, compared exactly).  The first such pair in canonical
    order is returned.  ``graph`` may supply a precomputed
    ``graph_of(f, tol)``.
    """
    alpha, beta = Fraction(alpha), Fraction(beta)
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    x, xs = (frac_vec(c) for c in point)
    v = f.value(x, xs)
    if v == Inf:
        return BRResult("vacuous", Inf)
    gap = Fraction(v) - pairing(x, xs)
    if gap >= alpha * beta:
        return BRResult("vacuous", float(gap))
    delta = max(f.e_grid.max_step, f.es_grid.max_step)
    caveat = ""
    if delta > min(alpha, beta) / 2:
        caveat = f"grid step {delta} exceeds min(alpha, beta)/2; the search is coarse"
    G = graph if graph is not None else graph_of(f, tol)
    if G.is_empty:
        return BRResult("fail", float(gap), None, caveat, ("empty graph",))
    # float prefilter with slack; every decision below is exact
    X, S = G.float_arrays
    fx, fs = np.array([float(c) for c in x]), np.array([float(c) for c in xs])
    dxf, dsf = ((X - fx) ** 2).sum(axis=1), ((S - fs) ** 2).sum(axis=1)
    a2 = float((alpha + delta) ** 2) * (1 + 1e-9) + 1e-12
    b2 = float((beta + delta) ** 2) * (1 + 1e-9) + 1e-12
    near = None
    for i in np.flatnonzero((dxf <= a2) & (dsf <= b2)):
        y, ys = G.ordered[int(i)]
        dx, ds = _sqnorm(y, x), _sqnorm(ys, xs)
        if dx < alpha**2 and ds < beta**2:
            return BRResult("witness", float(gap), (y, ys), caveat)
        if near is None and dx <= (alpha + delta) ** 2 and ds <= (beta + delta) ** 2:
            near = (y, ys)
    if near is not None:
        return BRResult("near_miss", float(gap), near, caveat)
    return BRResult("fail", float(gap), None, caveat)


@dataclass(frozen=True)
class BRSweep:
    """Outcome of :func:`br_sweep` for one ``(alpha, beta)``.

    ``counts`` tallies the :class:`BRResult` statuses over the points;
    ``first_witness`` and ``first_bad`` pair the first point of each kind
    (in the order given) with its full :func:`br_check` result.
    """

    alpha: Fraction
    beta: Fraction
    counts: dict
    coarse: int
    first_witness: tuple | None = None
    first_bad: tuple | None = None

    @property
    def ok(self) -> bool:
        return self.first_bad is None


def br_sweep(f: ReprFn, alphas, betas, points=None, tol: float | None = None,
             graph: OperatorGraph | None = None, chunk: int = 2048) -> list[BRSweep]:
    """:func:`br_check` over many points and every ``(alpha, beta)`` pair.

    Exact gaps are computed once per point.  Witness membership is decided
    on floats only when every relevant distance is clear of the ball
    boundaries by a relative margin; other points (and every point without
    a float witness) go through :func:`br_check`, so the statuses equal
    those of pointwise calls.  ``points`` defaults to the whole grid.
    """
    n = f.n
    pts = list(f.grid.exact_points()) if points is None else [tuple(frac_vec(p)) for p in points]
    G = graph if graph is not None else graph_of(f, tol)
    gaps = []
    for p in pts:
        v = f.value(p[:n], p[n:])
        gaps.append(None if v == Inf else Fraction(v) - pairing(p[:n], p[n:]))
    P = np.array([[float(c) for c in p] for p in pts], dtype=float).reshape(len(pts), 2 * n)
    X, S = G.float_arrays
    delta = max(f.e_grid.max_step, f.es_grid.max_step)
    out = []
    for a in alphas:
        for b in betas:
            a, b = Fraction(a), Fraction(b)
            if a <= 0 or b <= 0:
                raise ValueError("alpha and beta must be positive")
            ab = a * b
            active = [i for i, g in enumerate(gaps) if g is not None and g < ab]
            counts = {"witness": 0, "vacuous": len(pts) - len(active), "near_miss": 0, "fail": 0}
            coarse = len(active) if delta > min(a, b) / 2 else 0
            sure = np.zeros(len(active), dtype=bool)
            if len(G) and active:
                a2, b2 = float(a * a), float(b * b)
                idx = np.array(active)
                for lo in range(0, len(idx), chunk):
                    blk = P[idx[lo:lo + chunk]]
                    dx = ((blk[:, None, :n] - X[None]) ** 2).sum(axis=2)
                    ds = ((blk[:, None, n:] - S[None]) ** 2).sum(axis=2)
                    inside = (dx < a2 * (1 - 1e-9)) & (ds < b2 * (1 - 1e-9))
                    sure[lo:lo + chunk] = inside.any(axis=1)
            first_wit = first_bad = None
            for k, i in enumerate(active):
                if sure[k] and first_wit is not None:
                    counts["witness"] += 1
                    continue
                p = pts[i]
                r = br_check(f, a, b, (p[:n], p[n:]), tol, graph=G)
                counts[r.status] += 1
                if r.status == "witness" and first_wit is None:
                    first_wit = (p, r)
                if r.status in ("near_miss", "fail") and first_bad is None:
                    first_bad = (p, r)
            out.append(BRSweep(a, b, counts, coarse, first_wit, first_bad))
    return out
