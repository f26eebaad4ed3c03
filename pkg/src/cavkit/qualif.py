"""Qualification conditions: when is a finitely generated cone a subspace?

The cone generated by a finite set ``D`` is a linear subspace exactly when
``-d`` lies in the cone for every generator ``d``, equivalently when some
strictly positive combination of the generators vanishes.  That is decided
by one exact phase-one solve of ``sum_i lambda_i d_i = 0, lambda_i >= 1``;
its solution certifies every ``-d_j`` at once and its infeasibility yields a
separating functional.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .lp import phase_one
from .numcore import GridFn, RatLinMap, frac_vec

__all__ = [
    "QCResult",
    "SandwichResult",
    "MAX_GENERATORS",
    "MAX_DIM",
    "dom_project",
    "minkowski_difference",
    "primitive_direction",
    "span_basis",
    "in_span",
    "cone_is_subspace",
    "check_qualification",
    "check_qualification_constrained",
    "sandwich_check",
    "closure_containment",
]

MAX_GENERATORS = 4096
MAX_DIM = 8

Vec = tuple[Fraction, ...]


@dataclass(frozen=True)
class QCResult:
    """Decision on whether ``cone(generators)`` is a subspace.

    Attributes
    ----------
    generators : tuple of vectors
        Distinct primitive directions of the input set (zero dropped).
    is_subspace : bool
    basis : tuple of vectors
        Basis of the span of the generators (row-reduced, exact).
    certificates : tuple
        When ``is_subspace``: for generator ``j``, nonnegative coefficients
        ``c`` (one per generator, ``c[j] = 0``) with ``sum c_i d_i = -d_j``.
        Otherwise empty.
    failing : int or None
        Index of a generator whose negative is outside the cone.
    separator : vector or None
        ``psi`` with ``<psi, d_i> <= 0`` for all ``i`` and
        ``<psi, d_failing> < 0``.
    meets : bool or None
        For setup checks: whether the difference set contains 0, i.e. the
        projected domains meet (which makes the inf-convolution proper).
    """

    generators: tuple[Vec, ...]
    is_subspace: bool
    basis: tuple[Vec, ...]
    certificates: tuple[tuple[Fraction, ...], ...] = ()
    failing: int | None = None
    separator: Vec | None = None
    meets: bool | None = None
    dim: int = 0

    def verify(self) -> bool:
        """Re-check the stored certificates by direct substitution."""
        gens = self.generators
        if self.is_subspace:
            if len(self.certificates) != len(gens):
                return False
            for j, c in enumerate(self.certificates):
                if any(v < 0 for v in c) or c[j] != 0:
                    return False
                comb = [sum((c[i] * gens[i][k] for i in range(len(gens))), Fraction(0))
                        for k in range(self.dim)]
                if any(comb[k] != -gens[j][k] for k in range(self.dim)):
                    return False
            return True
        if self.separator is None or self.failing is None:
            return False
        psi = self.separator
        dots = [sum((p * d for p, d in zip(psi, g)), Fraction(0)) for g in gens]
        return all(v <= 0 for v in dots) and dots[self.failing] < 0

    def to_dict(self) -> dict:
        out = {
            "is_subspace": self.is_subspace,
            "generators": [[str(v) for v in g] for g in self.generators],
            "basis": [[str(v) for v in b] for b in self.basis],
        }
        if self.meets is not None:
            out["domains_meet"] = self.meets
        if not self.is_subspace and self.failing is not None:
            out["failing_generator"] = [str(v) for v in self.generators[self.failing]]
            out["separator"] = [str(v) for v in self.separator]
        return out


def dom_project(f: GridFn, axes: Sequence[int]) -> frozenset[Vec]:
    """Coordinates on ``axes`` of the grid points where ``f`` is finite."""
    axes = list(axes)
    if not axes or len(set(axes)) != len(axes) or any(not 0 <= a < f.dim for a in axes):
        raise ValueError(f"invalid block {axes} for a {f.dim}-dimensional function")
    mask = f.dom_mask
    sub = f.grid.sub(axes)
    keep = np.any(mask, axis=tuple(i for i in range(f.dim) if i not in axes))
    if axes != sorted(axes):
        keep = np.transpose(keep, np.argsort(np.argsort(axes)))
    return frozenset(sub.exact_point(int(i)) for i in np.flatnonzero(keep))


def minkowski_difference(P: Iterable[Sequence], Q: Iterable[Sequence],
                         M: RatLinMap | None = None) -> frozenset[Vec]:
    """``{p - M q}`` for finite sets ``P`` and ``Q`` (``M`` defaults to identity)."""
    Pl = [frac_vec(p) for p in P]
    Ql = [frac_vec(q) if M is None else M.apply(q) for q in Q]
    return frozenset(tuple(a - b for a, b in zip(p, q)) for p in Pl for q in Ql)


def primitive_direction(v: Sequence) -> Vec | None:
    """Scale a rational vector to coprime integers; ``None`` for zero."""
    v = frac_vec(v)
    if all(x == 0 for x in v):
        return None
    den = math.lcm(*(x.denominator for x in v))
    ints = [int(x * den) for x in v]
    g = math.gcd(*ints)
    return tuple(Fraction(i // g) for i in ints)


def _rref(rows: list[list[Fraction]]) -> list[list[Fraction]]:
    rows = [list(r) for r in rows]
    if not rows:
        return []
    n = len(rows[0])
    out, r = rows, 0
    for c in range(n):
        piv = next((i for i in range(r, len(out)) if out[i][c] != 0), None)
        if piv is None:
            continue
        out[r], out[piv] = out[piv], out[r]
        p = out[r][c]
        out[r] = [v / p for v in out[r]]
        for i in range(len(out)):
            if i != r and out[i][c] != 0:
                fct = out[i][c]
                out[i] = [a - fct * b for a, b in zip(out[i], out[r])]
        r += 1
        if r == len(out):
            break
    return out[:r]


def span_basis(vectors: Iterable[Sequence]) -> tuple[Vec, ...]:
    """Reduced row-echelon basis of the span of ``vectors`` (exact)."""
    rows = [list(frac_vec(v)) for v in vectors]
    return tuple(tuple(r) for r in _rref(rows))


def in_span(point: Sequence, basis: Sequence[Sequence]) -> bool:
    """Whether ``point`` is a linear combination of ``basis`` (exact)."""
    p = frac_vec(point)
    if not basis:
        return all(v == 0 for v in p)
    rank = len(span_basis(basis))
    return len(span_basis(list(basis) + [p])) == rank


def cone_is_subspace(D: Iterable[Sequence]) -> QCResult:
    """Decide exactly whether the convex cone generated by ``D`` is a subspace.

    Parameters
    ----------
    D : iterable of rational vectors
        Nonempty.  Zero vectors and positive rescalings are collapsed.

    Returns
    -------
    QCResult

    Raises
    ------
    ValueError
        Empty input, mixed dimensions or a size above the caps
        (``MAX_GENERATORS`` directions, ``MAX_DIM`` coordinates).
    """
    pts = [frac_vec(d) for d in D]
    if not pts:
        raise ValueError("the generator set is empty")
    dim = len(pts[0])
    if any(len(p) != dim for p in pts):
        raise ValueError("generators have mixed dimensions")
    if dim > MAX_DIM:
        raise ValueError(f"dimension {dim} exceeds the cap of {MAX_DIM}")
    gens = sorted({g for g in map(primitive_direction, pts) if g is not None})
    if len(gens) > MAX_GENERATORS:
        raise ValueError(f"{len(gens)} generator directions exceed the cap of {MAX_GENERATORS}")
    if not gens:
        return QCResult((), True, (), (), dim=dim)
    basis = span_basis(gens)
    n = len(gens)
    # sum_i (1 + mu_i) d_i = 0  <=>  sum_i mu_i d_i = -sum_i d_i, mu >= 0
    cols = [[gens[i][k] for i in range(n)] for k in range(dim)]
    rhs = [-sum((g[k] for g in gens), Fraction(0)) for k in range(dim)]
    res = phase_one(cols, rhs)
    if res.feasible:
        lam = [1 + m for m in res.x]
        certs = []
        for j in range(n):
            certs.append(tuple(Fraction(0) if i == j else lam[i] / lam[j] for i in range(n)))
        return QCResult(tuple(gens), True, basis, tuple(certs), dim=dim)
    psi = res.farkas
    dots = [sum((p * d for p, d in zip(psi, g)), Fraction(0)) for g in gens]
    failing = next(i for i, v in enumerate(dots) if v < 0)
    return QCResult(tuple(gens), False, basis, (), failing, psi, dim=dim)


def _with_meets(qc: QCResult, meets: bool) -> QCResult:
    return QCResult(qc.generators, qc.is_subspace, qc.basis, qc.certificates,
                    qc.failing, qc.separator, meets, qc.dim)


def check_qualification(setup) -> QCResult:
    """Qualification for a coupled setup.

    The generators are ``pi_Y dom g - A(pi_X dom f)``; ``meets`` records
    whether 0 is among them.
    """
    py = dom_project(setup.g, range(setup.dy))
    px = dom_project(setup.f, range(setup.dx))
    D = minkowski_difference(py, px, setup.A)
    zero = tuple(Fraction(0) for _ in range(setup.dy))
    return _with_meets(cone_is_subspace(D), zero in D)


def check_qualification_constrained(setup) -> QCResult:
    """Qualification for a constrained setup.

    ``C(X)`` is a whole subspace, so the generators are ``pi_W dom k``
    together with plus and minus every column of ``C``.  ``meets`` records
    whether ``pi_W dom k`` touches ``C(X)``.
    """
    pw = dom_project(setup.k, range(setup.dw))
    cols = list(setup.C.T.entries)
    gens = list(pw) + cols + [tuple(-v for v in c) for c in cols]
    cbasis = span_basis(cols) if cols else ()
    meets = any(in_span(p, cbasis) for p in pw)
    return _with_meets(cone_is_subspace(gens), meets)


@dataclass(frozen=True)
class SandwichResult:
    """Outcome of :func:`sandwich_check`."""

    inner_ok: bool
    outer_ok: bool
    equal: bool
    qc: QCResult
    offending: Vec | None = None

    @property
    def holds(self) -> bool:
        return self.inner_ok and self.outer_ok and self.equal


def sandwich_check(S_inner: Iterable[Sequence], H_basis: Sequence[Sequence],
                   D_outer: Iterable[Sequence]) -> SandwichResult:
    """Check ``S_inner ⊂ H ⊂ cone(D_outer)`` and that the cone equals ``H``.

    ``H`` is the span of ``H_basis`` (``{0}`` when the basis is empty).
    """
    inner = [frac_vec(p) for p in S_inner]
    outer = [frac_vec(p) for p in D_outer]
    Hb = [frac_vec(b) for b in H_basis]
    dims = {len(p) for p in inner + outer + Hb}
    if len(dims) > 1:
        raise ValueError("inconsistent dimensions")
    offending = next((p for p in inner if not in_span(p, Hb)), None)
    inner_ok = offending is None
    qc = cone_is_subspace(outer)
    gens = list(qc.generators)
    outer_ok = True
    for b in Hb:
        for v in (b, tuple(-x for x in b)):
            if not gens:
                outer_ok = all(x == 0 for x in v)
            else:
                cols = [[g[k] for g in gens] for k in range(len(v))]
                outer_ok = phase_one(cols, list(v)).feasible
            if not outer_ok:
                break
        if not outer_ok:
            break
    equal = qc.is_subspace and span_basis(Hb) == qc.basis if Hb else qc.is_subspace and not qc.basis
    return SandwichResult(inner_ok, outer_ok, equal, qc, offending)


def closure_containment(points: Iterable[Sequence], targets: Iterable[Sequence],
                        tol: float) -> tuple[bool, Vec | None, float]:
    """Whether every point lies within Euclidean distance ``tol`` of ``targets``.

    Returns ``(ok, worst_point, worst_distance)``.
    """
    P = [frac_vec(p) for p in points]
    T = np.array([[float(v) for v in frac_vec(t)] for t in targets], dtype=float)
    if not P:
        return True, None, 0.0
    if T.size == 0:
        return False, P[0], math.inf
    worst, wd = None, -1.0
    for p in P:
        d = float(np.min(np.linalg.norm(T - np.array([float(v) for v in p]), axis=1)))
        if d > wd:
            worst, wd = p, d
    return wd <= tol, worst, wd
