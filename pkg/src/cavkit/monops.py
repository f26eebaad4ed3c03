"""Finite monotone operator graphs, their algebra and maximality harnesses.

Graphs are finite sets of rational pairs ``(x, x*)``.  All decisions
(monotonicity, cc-conditions, grid maximality) are exact.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .numcore import LatticeGrid, Polytope, RatLinMap, frac_vec

__all__ = [
    "OperatorGraph",
    "CcInstance",
    "CcVerdict",
    "InstanceOutcome",
    "HarnessReport",
    "CompositeReport",
    "is_monotone",
    "op_algebra",
    "graph_sum",
    "parallel_sum",
    "linear_transform",
    "cc_check",
    "is_grid_maximal",
    "cc_maximality_harness",
    "strong_maximality_harness",
    "verify_composite_representability",
]

Vec = tuple[Fraction, ...]
Pair = tuple[Vec, Vec]


@dataclass(frozen=True)
class OperatorGraph:
    """Finite graph of a multifunction ``E -> E*``.

    ``pairs`` is a frozenset of ``(x, x*)`` with rational coordinates;
    iteration follows the canonical lexicographic order.
    """

    pairs: frozenset
    dim: int
    dual_dim: int | None = None

    def __post_init__(self):
        pairs = frozenset((frac_vec(x), frac_vec(s)) for x, s in self.pairs)
        dd = self.dim if self.dual_dim is None else self.dual_dim
        for x, s in pairs:
            if len(x) != self.dim or len(s) != dd:
                raise ValueError(f"pair {x, s} does not match dimensions ({self.dim}, {dd})")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "dual_dim", dd)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Sequence, Sequence]], dim: int | None = None,
                   dual_dim: int | None = None) -> "OperatorGraph":
        pairs = [(frac_vec(x), frac_vec(s)) for x, s in pairs]
        if dim is None:
            if not pairs:
                raise ValueError("dimension required for an empty graph")
            dim, dual_dim = len(pairs[0][0]), len(pairs[0][1])
        return cls(frozenset(pairs), dim, dual_dim)

    @classmethod
    def empty(cls, dim: int, dual_dim: int | None = None) -> "OperatorGraph":
        return cls(frozenset(), dim, dual_dim)

    @cached_property
    def ordered(self) -> tuple[Pair, ...]:
        return tuple(sorted(self.pairs))

    @cached_property
    def float_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Float coordinates of the pairs in canonical order, shape ``(n, dim)``."""
        xs = np.array([[float(c) for c in x] for x, _ in self.ordered]).reshape(len(self), self.dim)
        ss = np.array([[float(c) for c in s] for _, s in self.ordered]).reshape(len(self), self.dual_dim)
        return xs, ss

    def __iter__(self):
        return iter(self.ordered)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        x, s = pair
        return (frac_vec(x), frac_vec(s)) in self.pairs

    def __eq__(self, other) -> bool:
        if not isinstance(other, OperatorGraph):
            return NotImplemented
        return self.pairs == other.pairs and (self.dim, self.dual_dim) == (other.dim, other.dual_dim)

    def __hash__(self):
        return hash((self.pairs, self.dim, self.dual_dim))

    @property
    def is_empty(self) -> bool:
        return not self.pairs

    def domain(self) -> frozenset[Vec]:
        return frozenset(x for x, _ in self.pairs)

    def range(self) -> frozenset[Vec]:
        return frozenset(s for _, s in self.pairs)

    def at(self, x) -> list[Vec]:
        """Sorted values of the multifunction at ``x``."""
        x = frac_vec(x)
        return sorted(s for p, s in self.pairs if p == x)

    def inverse(self) -> "OperatorGraph":
        return OperatorGraph(frozenset((s, x) for x, s in self.pairs), self.dual_dim, self.dim)

    def restrict(self, e_grid: LatticeGrid, es_grid: LatticeGrid) -> "OperatorGraph":
        """Pairs whose coordinates are points of the two grids."""
        keep = frozenset(p for p in self.pairs if e_grid.contains(p[0]) and es_grid.contains(p[1]))
        return OperatorGraph(keep, self.dim, self.dual_dim)

    def to_list(self) -> list[list[list[str]]]:
        return [[[str(v) for v in x], [str(v) for v in s]] for x, s in self.ordered]

    def __repr__(self):
        return f"OperatorGraph({len(self)} pairs, dim {self.dim})"


# ---------------------------------------------------------------- monotonicity


def _scaled(vecs: Sequence[Vec]) -> tuple[list[list[int]], int]:
    den = 1
    for v in vecs:
        for c in v:
            den = math.lcm(den, c.denominator)
    return [[int(c * den) for c in v] for v in vecs], den


def is_monotone(S: OperatorGraph) -> tuple[bool, tuple[Pair, Pair] | None]:
    """Exact check of ``<s - t, s* - t*> >= 0`` over all pairs.

    Returns ``(True, None)`` or ``(False, (p, q))`` with the first violating
    pair in canonical order.
    """
    pts = S.ordered
    n = len(pts)
    if n < 2:
        return True, None
    X, _ = _scaled([p[0] for p in pts])
    Y, _ = _scaled([p[1] for p in pts])
    bound = max(max(abs(c) for r in X for c in r), 1) * max(max(abs(c) for r in Y for c in r), 1)
    if 4 * bound * max(S.dim, 1) < 2**62:
        Xa, Ya = np.array(X, dtype=np.int64), np.array(Y, dtype=np.int64)
        for i in range(n - 1):
            dx = Xa[i + 1 :] - Xa[i]
            dy = Ya[i + 1 :] - Ya[i]
            bad = np.flatnonzero(np.einsum("ij,ij->i", dx, dy) < 0)
            if bad.size:
                return False, (pts[i], pts[i + 1 + int(bad[0])])
        return True, None
    for i in range(n - 1):
        for j in range(i + 1, n):
            if sum((a - b) * (c - d) for a, b, c, d in zip(pts[i][0], pts[j][0], pts[i][1], pts[j][1])) < 0:
                return False, (pts[i], pts[j])
    return True, None


# ---------------------------------------------------------------- algebra


def _add(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def graph_sum(S: OperatorGraph, T: OperatorGraph) -> OperatorGraph:
    """``S + T``: pairs ``(x, s* + t*)`` over the shared domain."""
    if (S.dim, S.dual_dim) != (T.dim, T.dual_dim):
        raise ValueError("dimension mismatch in sum")
    tv = defaultdict(list)
    for x, t in T.pairs:
        tv[x].append(t)
    out = frozenset((x, _add(s, t)) for x, s in S.pairs for t in tv.get(x, ()))
    return OperatorGraph(out, S.dim, S.dual_dim)


def parallel_sum(S: OperatorGraph, T: OperatorGraph, method: str = "definition") -> OperatorGraph:
    """Parallel sum ``S || T``.

    ``method="definition"``: ``x* in (S||T)x`` iff ``x* in S(x - v) ∩ T v``
    for some ``v``, enumerated over graph points.  ``method="inverses"``:
    ``(S^-1 + T^-1)^-1``.
    """
    if (S.dim, S.dual_dim) != (T.dim, T.dual_dim):
        raise ValueError("dimension mismatch in parallel sum")
    if method == "inverses":
        return graph_sum(S.inverse(), T.inverse()).inverse()
    if method != "definition":
        raise ValueError(f"unknown method {method!r}")
    by_value = defaultdict(list)
    for v, t in T.pairs:
        by_value[t].append(v)
    out = frozenset((_add(a, v), s) for a, s in S.pairs for v in by_value.get(s, ()))
    return OperatorGraph(out, S.dim, S.dual_dim)


def linear_transform(T: OperatorGraph, A: RatLinMap, domain: Iterable[Sequence]) -> OperatorGraph:
    """``A^T T A`` on the given domain: pairs ``(x, A^T y*)`` with
    ``(A x, y*)`` in ``T`` and ``x`` in ``domain``."""
    if A.rows != T.dim:
        raise ValueError("A must map into the domain space of T")
    vals = defaultdict(list)
    for y, s in T.pairs:
        vals[y].append(s)
    At = A.T
    out = set()
    for x in domain:
        x = frac_vec(x)
        for s in vals.get(A.apply(x), ()):
            out.add((x, At.apply(s)))
    return OperatorGraph(frozenset(out), A.cols, At.rows)


def op_algebra(S: OperatorGraph, T: OperatorGraph | None = None, mode: str = "sum", *,
               A: RatLinMap | None = None, domain: Iterable[Sequence] | None = None) -> OperatorGraph:
    """Compose operator graphs.

    Modes
    -----
    ``sum``            ``S + T`` on the shared domain.
    ``inverse``        ``S^-1`` (``T`` unused).
    ``parallel``       ``S || T``; computed from the definition and from
                       ``(S^-1 + T^-1)^-1``, which must agree.
    ``conj_transform`` ``A^T S A`` over ``domain`` (``T`` unused).
    """
    if mode == "sum":
        return graph_sum(S, T)
    if mode == "inverse":
        return S.inverse()
    if mode == "parallel":
        a = parallel_sum(S, T, "definition")
        b = parallel_sum(S, T, "inverses")
        if a != b:
            raise RuntimeError("parallel sum: definition and inverse formula disagree")
        return a
    if mode == "conj_transform":
        if A is None or domain is None:
            raise ValueError("conj_transform needs a map A and a domain point set")
        return linear_transform(S, A, domain)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------- cc conditions


@dataclass(frozen=True)
class CcInstance:
    """Test data for one cc-maximality condition.

    ``kind="star"``: ``point`` is ``y`` in E and ``C`` a polytope in E*.
    ``kind="space"``: ``point`` is ``y*`` in E* and ``C`` a polytope in E.
    """

    kind: str
    point: Vec
    C: Polytope

    def __post_init__(self):
        if self.kind not in ("star", "space"):
            raise ValueError("kind must be 'star' or 'space'")
        p = frac_vec(self.point)
        if len(p) != self.C.dim:
            raise ValueError("point and polytope dimensions differ")
        object.__setattr__(self, "point", p)

    @classmethod
    def star(cls, y, C: Polytope) -> "CcInstance":
        return cls("star", frac_vec(y), C)

    @classmethod
    def space(cls, C: Polytope, ystar) -> "CcInstance":
        return cls("space", frac_vec(ystar), C)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "point": [str(v) for v in self.point],
                "C": [[str(v) for v in w] for w in self.C.vertices]}


@dataclass(frozen=True)
class CcVerdict:
    hypothesis: bool
    conclusion: bool
    blocking_pair: Pair | None = None  # a pair violating the hypothesis

    @property
    def vacuous(self) -> bool:
        return not self.hypothesis

    @property
    def holds(self) -> bool:
        return (not self.hypothesis) or self.conclusion


def _dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def cc_check(S: OperatorGraph, inst: CcInstance) -> CcVerdict:
    """Evaluate one cc-maximality implication on a finite graph.

    Star kind: hypothesis "for every pair ``(s, s*)`` some ``y* in C`` has
    ``<s - y, s* - y*> >= 0``", i.e. ``<s - y, s*> - min_C <s - y, .> >= 0``;
    conclusion "some ``(y, s*)`` in the graph has ``s* in C``".  The space
    kind mirrors this with the roles of E and E* exchanged.
    """
    C, p = inst.C, inst.point
    blocking = None
    for s, ss in S:
        if inst.kind == "star":
            d = tuple(a - b for a, b in zip(s, p))
            val = _dot(d, ss) - C.min_pairing(d)
        else:
            d = tuple(a - b for a, b in zip(ss, p))
            val = _dot(s, d) - C.support(d)
        if val < 0:
            blocking = (s, ss)
            break
    hyp = blocking is None
    if inst.kind == "star":
        concl = any(C.contains(ss) for ss in S.at(p))
    else:
        concl = any(C.contains(s) for s, ss in S if ss == p)
    return CcVerdict(hyp, concl, blocking)


def is_grid_maximal(T: OperatorGraph, e_grid: LatticeGrid, es_grid: LatticeGrid
                    ) -> tuple[bool, Pair | None]:
    """Grid surrogate for maximal monotonicity.

    ``T`` is grid-maximal when no point of ``e_grid x es_grid`` outside the
    graph is monotonically related to every pair of ``T``.  Returns the first
    addable point otherwise.
    """
    if T.is_empty:
        return False, (e_grid.exact_point(0), es_grid.exact_point(0))
    pts = T.ordered
    ex, es = list(e_grid.exact_points()), list(es_grid.exact_points())
    X, dx = _scaled([p[0] for p in pts] + ex)
    Y, dy = _scaled([p[1] for p in pts] + es)
    n = len(pts)
    TX, CX = np.array(X[:n], dtype=object), np.array(X[n:], dtype=object)
    TY, CY = np.array(Y[:n], dtype=object), np.array(Y[n:], dtype=object)
    small = max(abs(int(v)) for v in np.concatenate([TX.ravel(), CX.ravel()])) * max(
        abs(int(v)) for v in np.concatenate([TY.ravel(), CY.ravel()])) < 2**28
    dt = np.int64 if small else object
    TX, CX, TY, CY = (a.astype(dt) for a in (TX, CX, TY, CY))
    for i, x in enumerate(ex):
        # min over T of <x - t, x* - t*> for every candidate x* at once
        ddx = CX[i][None, :] - TX  # (n, d)
        lin = (ddx * TY).sum(axis=1)  # <x - t, t*>
        vals = CY @ ddx.T - lin[None, :]  # (m, n)
        ok = (vals >= 0).all(axis=1)
        for j in np.flatnonzero(ok):
            cand = (x, es[int(j)])
            if cand not in T.pairs:
                return False, cand
    return True, None


@dataclass(frozen=True)
class InstanceOutcome:
    """Per-instance outcome of a harness run.

    ``status`` is one of ``verified`` (hypothesis and conclusion hold),
    ``vacuous`` (hypothesis fails), ``skipped`` (the composed operator is not
    grid-maximal, or the witness point lies outside the extent) and
    ``counterexample``.
    """

    instance: CcInstance
    status: str
    reason: str = ""
    verdict: CcVerdict | None = None
    composed_maximal: bool | None = None
    composed_size: int = 0
    composite: str | None = None  # status of the composite representation check


@dataclass(frozen=True)
class HarnessReport:
    outcomes: tuple[InstanceOutcome, ...]

    @property
    def counterexamples(self) -> list[InstanceOutcome]:
        return [o for o in self.outcomes if o.status == "counterexample"]

    @property
    def composite_failures(self) -> list[InstanceOutcome]:
        return [o for o in self.outcomes if o.composite == "failed"]

    def count(self, status: str) -> int:
        return sum(o.status == status for o in self.outcomes)

    @property
    def ok(self) -> bool:
        return not self.counterexamples


def _compose(S: OperatorGraph, inst: CcInstance, e_grid: LatticeGrid, es_grid: LatticeGrid,
             extent: tuple[LatticeGrid, LatticeGrid]):
    from .reprfn import graph_of, inverse_normal_repr, normal_cone_repr

    K = -inst.C
    if inst.kind == "star":
        M = graph_of(inverse_normal_repr(inst.point, K, e_grid, es_grid))
        T = graph_sum(S, M)
        anchor = (inst.point, tuple(Fraction(0) for _ in inst.point))
    else:
        N = graph_of(normal_cone_repr(K, inst.point, e_grid, es_grid))
        T = parallel_sum(S, N)
        anchor = (tuple(Fraction(0) for _ in inst.point), inst.point)
    inside = extent[0].contains(anchor[0]) and extent[1].contains(anchor[1])
    return T, inside


def cc_maximality_harness(
    S: OperatorGraph,
    instances: Iterable[CcInstance],
    e_grid: LatticeGrid,
    es_grid: LatticeGrid,
    maximality_oracle: Callable[[OperatorGraph], bool] | None = None,
    extent: tuple[LatticeGrid, LatticeGrid] | None = None,
) -> HarnessReport:
    """Test the implication "composed operator maximal => cc condition".

    For a star instance ``(y, C)`` the composed operator is
    ``S + M_{y,K}`` and for a space instance ``(C, y*)`` it is
    ``S || N_{K,y*}``, with ``K = -C``; the auxiliary graphs are sampled on
    ``e_grid x es_grid``.  When the oracle affirms the composed operator the
    cc implication must hold; failures are reported as counterexamples.

    The default oracle is grid maximality with candidates drawn from
    ``extent`` (defaults to the sampling grids).  An extent strictly inside
    the sampling grids keeps the truncation at the grid edges from
    disqualifying every instance.  Instances whose anchor point ``(y, 0)``
    or ``(0, y*)`` lies outside the extent are skipped because the grid
    surrogate says nothing there.
    """
    extent = extent or (e_grid, es_grid)
    if maximality_oracle is None:
        def maximality_oracle(T):
            return is_grid_maximal(T, *extent)[0]
    out = []
    for inst in instances:
        T, inside = _compose(S, inst, e_grid, es_grid, extent)
        if not inside:
            out.append(InstanceOutcome(inst, "skipped", "anchor point outside the extent",
                                       composed_size=len(T)))
            continue
        maximal = bool(maximality_oracle(T))
        if not maximal:
            out.append(InstanceOutcome(inst, "skipped", "composed operator not grid-maximal",
                                       composed_maximal=False, composed_size=len(T)))
            continue
        v = cc_check(S, inst)
        status = "vacuous" if v.vacuous else ("verified" if v.conclusion else "counterexample")
        out.append(InstanceOutcome(inst, status, "", v, True, len(T)))
    return HarnessReport(tuple(out))


def strong_maximality_harness(f, instances: Iterable[CcInstance], tol: float | None = None,
                              extent: tuple[LatticeGrid, LatticeGrid] | None = None,
                              check_composite: bool = False) -> HarnessReport:
    """cc implications for the graph of a strongly representative function.

    For each instance the composed operator (``S + M_{y,K}`` or
    ``S || N_{K,y*}``) is formed and must be grid-maximal over ``extent``,
    the discrete stand-in for maximality of strongly representable
    operators; the cc implication is then judged.  Instances failing this,
    or whose anchor lies outside the extent, are skipped.  ``extent``
    defaults to ``f``'s grids.

    With ``check_composite`` the composed operator is also checked to be the
    graph of the closed inf-convolution of ``f`` with the matching
    closed-form representative (identity maps; variant ``a`` for sums,
    ``c`` for parallel sums) and the status is recorded per instance.  This
    is markedly slower.
    """
    from .reprfn import graph_of, inverse_normal_repr, normal_cone_repr

    extent = extent or (f.e_grid, f.es_grid)
    S = graph_of(f, tol)
    ident = RatLinMap.identity(f.n)
    out = []
    for inst in instances:
        T, inside = _compose(S, inst, f.e_grid, f.es_grid, extent)
        if not inside:
            out.append(InstanceOutcome(inst, "skipped", "anchor point outside the extent",
                                       composed_size=len(T)))
            continue
        maximal = is_grid_maximal(T, *extent)[0]
        if not maximal:
            out.append(InstanceOutcome(inst, "skipped", "composed operator not grid-maximal",
                                       composed_maximal=False, composed_size=len(T)))
            continue
        comp = None
        if check_composite:
            if inst.kind == "star":
                g = inverse_normal_repr(inst.point, -inst.C, f.e_grid, f.es_grid)
                comp = verify_composite_representability(f, g, ident, "a", tol).status
            else:
                g = normal_cone_repr(-inst.C, inst.point, f.e_grid, f.es_grid)
                comp = verify_composite_representability(f, g, ident, "c", tol).status
        v = cc_check(S, inst)
        status = "vacuous" if v.vacuous else ("verified" if v.conclusion else "counterexample")
        out.append(InstanceOutcome(inst, status, "", v, True, len(T), comp))
    return HarnessReport(tuple(out))


# ---------------------------------------------------------------- composites


@dataclass(frozen=True)
class CompositeReport:
    """Outcome of :func:`verify_composite_representability`.

    ``status`` is ``verified``, ``failed`` or ``inapplicable`` (the
    qualification condition fails).
    """

    variant: str
    status: str
    qualification: object
    closure_graph: OperatorGraph | None = None
    combinatorial_graph: OperatorGraph | None = None
    graphs_equal: bool | None = None
    strongly_representative: bool | None = None
    only_in_closure: tuple = ()
    only_in_combinatorial: tuple = ()
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return self.status in ("verified", "inapplicable")


def verify_composite_representability(f, g, M: RatLinMap, variant: str = "a",
                                      tol: float | None = None,
                                      max_cells: int = 1 << 22) -> CompositeReport:
    """Check that a composite of two strongly representable operators is the
    graph of the closed inf-convolution of their representatives.

    Parameters
    ----------
    f, g : ReprFn
        Strongly representative functions on ``E x E*`` and ``F x F*``.
    M : RatLinMap
        Variant ``a``: ``A: E -> F``; the operator is
        ``M f + A^T (M g) A`` and
        ``h(x, x*) = min_{y*} f(x, x* - A^T y*) + g(A x, y*)``.
        Variants ``b`` and ``c``: ``B: F -> E``;
        ``h(x, x*) = min_y f(x - B y, x*) + g(y, B^T x*)``.  Variant ``c``
        compares with ``((M f)^-1 + B (M g)^-1 B^T)^-1`` and variant ``b``
        builds the same operator from the graphs of the conjugates.

    The closure ``h̄`` is the exact lower convex envelope on the grid.  Its
    graph must equal the combinatorial graph restricted to the grid, and
    ``h̄`` must pass the strong representativity check.
    """
    from .conjugate import closure
    from .quadab import QuadSetup, coupled_infconv
    from .qualif import check_qualification
    from .reprfn import (SampledRepr, at_transform, graph_of,
                         is_strongly_representative)

    if variant not in ("a", "b", "c"):
        raise ValueError("variant must be 'a', 'b' or 'c'")
    fs, gs = f.sample(), g.sample()
    n, m = f.n, g.n
    if variant == "a":
        setup = QuadSetup(fs, gs, M, M.T, n, m, f.es_grid, f.e_grid, g.es_grid, g.e_grid,
                          name="composite a")
    else:
        setup = QuadSetup(fs.transpose_blocks(n), gs.transpose_blocks(m), M.T, M, n, m,
                          f.e_grid, f.es_grid, g.e_grid, g.es_grid, name=f"composite {variant}")
    qc = check_qualification(setup)
    if not qc.is_subspace:
        return CompositeReport(variant, "inapplicable", qc,
                               notes=("qualification condition fails",))
    h = coupled_infconv(setup, max_cells)
    if variant != "a":
        h = h.transpose_blocks(n)
    hbar = SampledRepr(closure(h), n, label="closure of h")
    closed_graph = graph_of(hbar, tol)
    e_pts = list(f.e_grid.exact_points())
    es_pts = list(f.es_grid.exact_points())
    if variant == "a":
        comb = graph_sum(graph_of(f), linear_transform(graph_of(g), M, e_pts))
    elif variant == "c":
        inner = linear_transform(graph_of(g).inverse(), M.T, es_pts)
        comb = graph_sum(graph_of(f).inverse(), inner).inverse()
    else:
        mfs = graph_of(at_transform(f).repr).inverse()
        mgs = graph_of(at_transform(g).repr).inverse()
        comb = graph_sum(mfs, linear_transform(mgs, M.T, es_pts)).inverse()
    comb = comb.restrict(f.e_grid, f.es_grid)
    equal = closed_graph == comb
    strong = is_strongly_representative(hbar, tol).ok
    status = "verified" if (equal and strong) else "failed"
    return CompositeReport(
        variant, status, qc, closed_graph, comb, equal, strong,
        tuple(sorted(closed_graph.pairs - comb.pairs)),
        tuple(sorted(comb.pairs - closed_graph.pairs)),
    )
