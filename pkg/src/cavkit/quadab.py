"""Four-space inf-convolutions and their conjugate formulas.

Two primal constructions are provided.

*Coupled form.*  For ``f`` on ``X x U``, ``g`` on ``Y x V``, ``A: X -> Y`` and
``B: V -> U``::

    h(x, u) = min_v  f(x, u - B v) + g(A x, v)

with conjugate candidate::

    rhs(x0*, u0*) = min_{y*}  f*(x0* - A^T y*, u0*) + g*(y*, B^T u0*).

*Constrained form.*  For ``k`` on ``W x T``, ``C: X -> W`` and ``D: T -> U``::

    h(x, u) = min { k(C x, t) : D t = u }
    rhs(x0*, u0*) = min { k*(w*, D^T u0*) : C^T w* = x0* }.

The coupled form embeds in the constrained one via
``W = X x Y``, ``T = U x V``, ``C x = (x, A x)``, ``D(u, v) = u + B v`` and
``k((x, y), (u, v)) = f(x, u) + g(y, v)`` (see :func:`lift_to_constrained`).

All index arithmetic is exact: maps must carry grids onto lattices, and any
point that falls outside a grid's extent takes the value ``+inf``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .conjugate import DualGridError, conjugate_fast, is_closed, max_slope
from .numcore import (
    ExtReal,
    GridFn,
    INF,
    ImproperError,
    IncompatibleError,
    LatticeGrid,
    RatLinMap,
    frac_vec,
    grid_compatible,
    image_indices,
    lattice_affine,
)

__all__ = [
    "QuadSetup",
    "ConstrainedSetup",
    "DualityReport",
    "coupled_infconv",
    "coupled_dual_min",
    "coupled_dual_table",
    "verify_coupled_duality",
    "constrained_infconv",
    "constrained_dual_min",
    "constrained_dual_table",
    "verify_constrained_duality",
    "lift_to_constrained",
    "lifted_conjugate",
    "shear_preimage_sets",
    "weak_allowance",
    "DEFAULT_MAX_CELLS",
]

DEFAULT_MAX_CELLS = 1 << 22
_EPS = float(np.finfo(float).eps)


def _with_inf_row(a: np.ndarray) -> np.ndarray:
    """Append a row of +inf so index -1 reads +inf."""
    return np.concatenate([a, np.full((1,) + a.shape[1:], np.inf)], axis=0)


def _offset_indices(src: LatticeGrid, M: RatLinMap, tgt: LatticeGrid) -> np.ndarray:
    """Table ``T[p, q]``: flat ``tgt`` index of ``tgt_p - M src_q`` (or -1).

    Requires ``M`` to map ``src`` into the difference lattice of ``tgt``.
    """
    c, N = lattice_affine(M, src, tgt.difference_lattice())
    shift = src.indices() @ N.T + c  # lattice offsets of M src_q
    k = tgt.indices()[:, None, :] - shift[None, :, :]
    return tgt.flat_from_lattice(k)


def _window_slices(full: LatticeGrid, window: LatticeGrid | None) -> tuple[slice, ...]:
    """Index slices of ``full`` covering the sub-box ``window``."""
    if window is None:
        return tuple(slice(None) for _ in range(full.dim))
    if window.dim != full.dim or window.step != full.step:
        raise ValueError("the comparison window must share the dual grid's steps")
    lo, hi = full.lattice_index(window.exact_point(0)), full.lattice_index(window.exact_point(window.size - 1))
    if lo is None or hi is None:
        raise ValueError("the comparison window must lie inside the dual grid")
    return tuple(slice(a - l, b - l + 1) for a, b, l in zip(lo, hi, full.lo))


@dataclass(frozen=True)
class QuadSetup:
    """Data of a coupled inf-convolution and the dual grids used to verify it.

    ``f`` lives on ``X x U`` (its first ``dx`` axes are ``X``) and ``g`` on
    ``Y x V`` (first ``dy`` axes are ``Y``).  ``A`` maps ``X -> Y`` and ``B``
    maps ``V -> U``.  The dual grids stand for ``X*, U*, Y*, V*``.

    ``window`` optionally names a sub-box of ``X* x U*`` on which the
    verification compares both sides; the conjugate tables still span the
    full dual grids, so lookups ``x0* - A^T y*`` near the window's edge stay
    on the grid.
    """

    f: GridFn
    g: GridFn
    A: RatLinMap
    B: RatLinMap
    dx: int
    dy: int
    x_dual: LatticeGrid
    u_dual: LatticeGrid
    y_dual: LatticeGrid
    v_dual: LatticeGrid
    name: str = ""
    window: LatticeGrid | None = None

    def __post_init__(self):
        if self.window is not None:
            _window_slices(self.f_dual, self.window)
        if not (0 < self.dx < self.f.dim) or not (0 < self.dy < self.g.dim):
            raise ValueError("each function needs a nonempty first and second block")
        if (self.A.cols, self.A.rows) != (self.dx, self.dy):
            raise ValueError(f"A must be {self.dy}x{self.dx}, got {self.A.rows}x{self.A.cols}")
        du, dv = self.f.dim - self.dx, self.g.dim - self.dy
        if (self.B.cols, self.B.rows) != (dv, du):
            raise ValueError(f"B must be {du}x{dv}, got {self.B.rows}x{self.B.cols}")
        for name, grid, d in (("x_dual", self.x_dual, self.dx), ("u_dual", self.u_dual, du),
                              ("y_dual", self.y_dual, self.dy), ("v_dual", self.v_dual, dv)):
            if grid.dim != d:
                raise ValueError(f"{name} has dimension {grid.dim}, expected {d}")
        if not grid_compatible(self.A, self.x_grid, self.y_grid):
            raise IncompatibleError("A does not carry the X grid onto the Y lattice")
        if not grid_compatible(self.B, self.v_grid, self.u_grid.difference_lattice()):
            raise IncompatibleError("B does not carry the V grid onto the U step lattice")

    @property
    def du(self) -> int:
        return self.f.dim - self.dx

    @property
    def dv(self) -> int:
        return self.g.dim - self.dy

    @property
    def x_grid(self) -> LatticeGrid:
        return self.f.grid.sub(range(self.dx))

    @property
    def u_grid(self) -> LatticeGrid:
        return self.f.grid.sub(range(self.dx, self.f.dim))

    @property
    def y_grid(self) -> LatticeGrid:
        return self.g.grid.sub(range(self.dy))

    @property
    def v_grid(self) -> LatticeGrid:
        return self.g.grid.sub(range(self.dy, self.g.dim))

    @property
    def f_dual(self) -> LatticeGrid:
        return self.x_dual.product(self.u_dual)

    @property
    def g_dual(self) -> LatticeGrid:
        return self.y_dual.product(self.v_dual)

    @property
    def max_step(self) -> Fraction:
        grids = (self.f.grid, self.g.grid, self.x_dual, self.u_dual, self.y_dual, self.v_dual)
        return max(g.max_step for g in grids)


@dataclass(frozen=True)
class ConstrainedSetup:
    """Data of a constrained inf-convolution ``min {k(Cx, t) : D t = u}``.

    ``k`` lives on ``W x T`` with its first ``dw`` axes forming ``W``.
    ``kstar`` optionally supplies the conjugate of ``k`` on
    ``w_dual x t_dual``; it is computed on demand otherwise.  ``window``
    plays the same role as in :class:`QuadSetup`.  ``parts`` optionally
    lists functions whose separable sum is ``k``; closedness of ``k`` is
    then decided on them, since the envelope of a separable sum is the sum
    of the envelopes.
    """

    k: GridFn
    C: RatLinMap
    D: RatLinMap
    dw: int
    x_grid: LatticeGrid
    u_grid: LatticeGrid
    x_dual: LatticeGrid
    u_dual: LatticeGrid
    w_dual: LatticeGrid
    t_dual: LatticeGrid
    kstar: GridFn | None = None
    name: str = ""
    window: LatticeGrid | None = None
    parts: tuple[GridFn, ...] = ()

    def __post_init__(self):
        if self.window is not None:
            _window_slices(self.x_dual.product(self.u_dual), self.window)
        dt = self.k.dim - self.dw
        if not (0 < self.dw < self.k.dim):
            raise ValueError("k needs nonempty W and T blocks")
        if (self.C.rows, self.C.cols) != (self.dw, self.x_grid.dim):
            raise ValueError("C must map X into W")
        if (self.D.rows, self.D.cols) != (self.u_grid.dim, dt):
            raise ValueError("D must map T into U")
        if self.w_dual.dim != self.dw or self.t_dual.dim != dt:
            raise ValueError("dual grids do not match the W x T split")
        if self.x_dual.dim != self.x_grid.dim or self.u_dual.dim != self.u_grid.dim:
            raise ValueError("dual grids do not match X x U")
        if not grid_compatible(self.C, self.x_grid, self.w_grid):
            raise IncompatibleError("C does not carry the X grid onto the W lattice")
        if self.kstar is not None and self.kstar.grid != self.w_dual.product(self.t_dual):
            raise ValueError("kstar must live on w_dual x t_dual")

    @property
    def w_grid(self) -> LatticeGrid:
        return self.k.grid.sub(range(self.dw))

    @property
    def t_grid(self) -> LatticeGrid:
        return self.k.grid.sub(range(self.dw, self.k.dim))

    @property
    def h_dual(self) -> LatticeGrid:
        return self.x_dual.product(self.u_dual)

    @property
    def max_step(self) -> Fraction:
        grids = (self.k.grid, self.x_grid, self.u_grid, self.x_dual, self.u_dual,
                 self.w_dual, self.t_dual)
        return max(g.max_step for g in grids)


@dataclass(frozen=True)
class DualityReport:
    """Outcome of comparing ``h*`` with its min formula on a dual grid.

    Attributes
    ----------
    lhs, rhs : GridFn
        ``h*`` and the min formula (``+inf`` where no dual candidate lies on
        the grids) on ``X* x U*``.
    witness : ndarray
        Per dual point, the flat index of the attaining dual candidate
        (``-1`` where ``rhs`` is ``+inf``).
    witness_grid : LatticeGrid
        Grid that ``witness`` indexes into (``Y*`` or ``W*``).
    max_gap : ExtReal
        ``max(rhs - lhs)``.
    weak_ok : bool
        ``lhs <= rhs`` everywhere up to :func:`weak_allowance`.
    tolerance : float
        Discretisation tolerance ``(L_f + L_g + 1) * delta``.
    qualification : object
        The qualification check (a ``QCResult``), or ``None`` when skipped.
    hypotheses : dict
        Which conditions for the equality direction hold.
    """

    lhs: GridFn
    rhs: GridFn
    witness: np.ndarray
    witness_grid: LatticeGrid
    max_gap: ExtReal
    worst_point: tuple[Fraction, ...]
    weak_ok: bool
    weak_margin: float
    tolerance: float
    qualification: object
    hypotheses: dict = field(default_factory=dict)

    @property
    def strong_applicable(self) -> bool:
        return all(self.hypotheses.values())

    @property
    def strong_ok(self) -> bool:
        return self.max_gap.is_finite and self.max_gap.value <= self.tolerance

    @property
    def success(self) -> bool:
        if not self.weak_ok:
            return False
        return self.strong_ok if self.strong_applicable else True

    def witness_point(self, dual_point) -> tuple[Fraction, ...] | None:
        i = self.lhs.grid.flat_index(dual_point)
        if i is None:
            raise ValueError("not a point of the dual grid")
        w = int(self.witness.flat[i])
        return None if w < 0 else self.witness_grid.exact_point(w)


# ---------------------------------------------------------------- coupled form


def _check_cells(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise MemoryError(f"{what} needs {n} cells, above the cap of {cap}")


def coupled_infconv(setup: QuadSetup, max_cells: int = DEFAULT_MAX_CELLS) -> GridFn:
    """``h(x, u) = min_v f(x, u - B v) + g(A x, v)`` on the ``X x U`` grid.

    The sum is formed as ``fl(f + g)``.  Points ``u - B v`` outside the U
    extent and ``A x`` outside the Y extent contribute ``+inf``.

    Raises
    ------
    ImproperError
        When ``h`` is identically ``+inf`` (the projected domains of ``f``
        and ``g`` never meet through ``A``).
    """
    X, U, Y, V = setup.x_grid, setup.u_grid, setup.y_grid, setup.v_grid
    _check_cells(X.size * U.size * V.size, max_cells, "the coupled inf-convolution")
    ax = image_indices(setup.A, X, Y)  # (nX,)
    uv = _offset_indices(V, setup.B, U)  # (nU, nV): u - B v
    F = _with_inf_row(setup.f.values.reshape(X.size, U.size).T)  # (nU+1, nX)
    G = _with_inf_row(setup.g.values.reshape(Y.size, V.size))  # (nY+1, nV)
    fx = F[uv]  # (nU, nV, nX)
    gx = G[ax]  # (nX, nV)
    total = np.transpose(fx, (2, 0, 1)) + gx[:, None, :]  # (nX, nU, nV)
    h = total.min(axis=2)
    if np.isneginf(h).any():
        p = int(np.flatnonzero(np.isneginf(h))[0])
        raise ImproperError(f"inf-convolution is -inf at {setup.f.grid.exact_point(p)}")
    if not np.isfinite(h).any():
        raise ImproperError(
            "inf-convolution is identically +inf: no x has A x in the projected domain of g"
        )
    return GridFn(setup.f.grid, h.reshape(setup.f.grid.shape), "h")


def _dual_tables(setup: QuadSetup, fstar: GridFn | None, gstar: GridFn | None):
    if fstar is None:
        fstar = conjugate_fast(setup.f, setup.f_dual)
    if gstar is None:
        gstar = conjugate_fast(setup.g, setup.g_dual)
    if fstar.grid != setup.f_dual or gstar.grid != setup.g_dual:
        raise ValueError("conjugate tables must live on the setup's dual grids")
    return fstar, gstar


def coupled_dual_table(
    setup: QuadSetup,
    fstar: GridFn | None = None,
    gstar: GridFn | None = None,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> tuple[np.ndarray, np.ndarray]:
    """The min formula at every ``(x0*, u0*)`` of ``X* x U*``.

    Returns
    -------
    values : ndarray
        Shape of ``X* x U*``; ``+inf`` where no ``y*`` gives on-grid lookups.
    witness : ndarray
        Flat ``Y*`` index of the first (lexicographically smallest) minimiser,
        ``-1`` where ``values`` is ``+inf``.
    """
    Xs, Us, Ys, Vs = setup.x_dual, setup.u_dual, setup.y_dual, setup.v_dual
    AT, BT = setup.A.T, setup.B.T
    if not grid_compatible(AT, Ys, Xs.difference_lattice()):
        raise DualGridError("A^T does not carry the Y* grid onto the X* step lattice")
    if not grid_compatible(BT, Us, Vs):
        raise DualGridError("B^T does not carry the U* grid onto the V* lattice")
    _check_cells(Xs.size * Us.size * Ys.size, max_cells, "the dual min table")
    fstar, gstar = _dual_tables(setup, fstar, gstar)
    xy = _offset_indices(Ys, AT, Xs)  # (nX*, nY*): x0* - A^T y*
    bu = image_indices(BT, Us, Vs)  # (nU*,)
    Fs = _with_inf_row(fstar.values.reshape(Xs.size, Us.size))  # (nX*+1, nU*)
    Gs = np.concatenate([gstar.values.reshape(Ys.size, Vs.size),
                         np.full((Ys.size, 1), np.inf)], axis=1)  # (nY*, nV*+1)
    ft = Fs[xy]  # (nX*, nY*, nU*)
    gt = Gs[:, bu]  # (nY*, nU*)
    total = np.transpose(ft, (0, 2, 1)) + gt.T[None, :, :]  # (nX*, nU*, nY*)
    wit = np.argmin(total, axis=2)
    vals = np.take_along_axis(total, wit[..., None], axis=2)[..., 0]
    wit = np.where(np.isfinite(vals), wit, -1)
    return vals.reshape(setup.f_dual.shape) + 0.0, wit.reshape(setup.f_dual.shape)


def coupled_dual_min(
    setup: QuadSetup,
    point,
    fstar: GridFn | None = None,
    gstar: GridFn | None = None,
) -> tuple[ExtReal, tuple[Fraction, ...] | None]:
    """Min formula at one dual point ``(x0*, u0*)`` with its ``y*`` witness.

    Parameters
    ----------
    point : sequence
        Concatenated ``(x0*, u0*)`` on the ``X* x U*`` grid.
    fstar, gstar : GridFn, optional
        Precomputed conjugates on ``X* x U*`` and ``Y* x V*``.

    Returns
    -------
    (value, witness)
        ``witness`` is ``None`` when no ``y*`` gives on-grid lookups.
    """
    Xs, Us, Ys, Vs = setup.x_dual, setup.u_dual, setup.y_dual, setup.v_dual
    p = frac_vec(point)
    if setup.f_dual.flat_index(p) is None:
        raise ValueError(f"{p} is not a point of the X* x U* grid")
    if not grid_compatible(setup.A.T, Ys, Xs.difference_lattice()):
        raise DualGridError("A^T does not carry the Y* grid onto the X* step lattice")
    if not grid_compatible(setup.B.T, Us, Vs):
        raise DualGridError("B^T does not carry the U* grid onto the V* lattice")
    fstar, gstar = _dual_tables(setup, fstar, gstar)
    x0, u0 = p[: setup.dx], p[setup.dx :]
    bu = setup.B.T.apply(u0)
    best, arg = INF, None
    for ys in Ys.exact_points():
        at = setup.A.T.apply(ys)
        a = fstar.at(tuple(xv - av for xv, av in zip(x0, at)) + u0)
        b = gstar.at(tuple(ys) + bu)
        if a.is_inf or b.is_inf:
            continue
        v = ExtReal(a.value + b.value)
        if v < best:
            best, arg = v, tuple(ys)
    return best, arg


def weak_allowance(n_terms: int, scale: float) -> float:
    """Round-off allowance: 8 machine epsilons per accumulated term."""
    return 8.0 * _EPS * n_terms * max(scale, 1.0)


def _scale(*arrays: np.ndarray) -> float:
    m = 0.0
    for a in arrays:
        fin = a[np.isfinite(a)]
        if fin.size:
            m = max(m, float(np.max(np.abs(fin))))
    return m


def _grid_extent(g: LatticeGrid) -> float:
    return max(float(np.max(np.abs(g.axis(i)))) for i in range(g.dim))


def _restrict(lhs: GridFn, rhs: np.ndarray, wit: np.ndarray, window: LatticeGrid | None):
    if window is None:
        return lhs, rhs, wit
    sl = _window_slices(lhs.grid, window)
    return GridFn(window, lhs.values[sl], lhs.label), rhs[sl], wit[sl]


def _compare(lhs: GridFn, rhs_vals: np.ndarray, allowance: float):
    diff = rhs_vals - lhs.values
    weak_margin = float(np.min(np.where(np.isfinite(diff), diff, np.inf)))
    weak_ok = bool(np.all(lhs.values <= rhs_vals + allowance))
    gap = float(np.max(diff))
    worst = lhs.grid.exact_point(int(np.argmax(diff)))
    return weak_ok, weak_margin, ExtReal(gap), worst


def verify_coupled_duality(
    setup: QuadSetup,
    tol: float | None = None,
    max_cells: int = DEFAULT_MAX_CELLS,
    check_closed: bool = True,
    qualify: bool = True,
) -> DualityReport:
    """Compare ``h*`` with the min formula at every point of ``X* x U*``
    (or of ``setup.window`` when set).

    The inequality ``h* <= rhs`` holds for any inputs.  Equality, up to the
    discretisation tolerance ``(L_f + L_g + 1) * delta``, is expected when
    the qualification check passes and ``f``, ``g`` equal their closures;
    ``L`` is the largest axis-adjacent slope and ``delta`` the largest step
    over all primal and dual grids.  ``tol`` overrides the tolerance.
    """
    from .qualif import check_qualification

    h = coupled_infconv(setup, max_cells)
    lhs = conjugate_fast(h, setup.f_dual)
    fstar = conjugate_fast(setup.f, setup.f_dual)
    gstar = conjugate_fast(setup.g, setup.g_dual)
    rhs, wit = coupled_dual_table(setup, fstar, gstar, max_cells)
    lhs, rhs, wit = _restrict(lhs, rhs, wit, setup.window)
    ext = max(_grid_extent(g) for g in (setup.f.grid, setup.g.grid)) * max(
        _grid_extent(g) for g in (setup.x_dual, setup.u_dual, setup.y_dual, setup.v_dual)
    )
    scale = max(_scale(setup.f.values, setup.g.values, lhs.values, rhs), ext)
    allowance = weak_allowance(setup.f.dim + setup.g.dim + 2, scale)
    weak_ok, margin, gap, worst = _compare(lhs, rhs, allowance)
    if tol is None:
        tol = (max_slope(setup.f) + max_slope(setup.g) + 1.0) * float(setup.max_step)
    qc = check_qualification(setup) if qualify else None
    hyp = {"qualification": qc.is_subspace if qc else None}
    if check_closed:
        hyp["f_closed"] = is_closed(setup.f)
        hyp["g_closed"] = is_closed(setup.g)
    return DualityReport(
        lhs=lhs,
        rhs=GridFn(lhs.grid, rhs, "rhs") if np.isfinite(rhs).any() else _all_inf(lhs.grid),
        witness=wit,
        witness_grid=setup.y_dual,
        max_gap=gap,
        worst_point=worst,
        weak_ok=weak_ok,
        weak_margin=margin,
        tolerance=float(tol),
        qualification=qc,
        hypotheses=hyp,
    )


class _InfGridFn(GridFn):
    """A GridFn that is allowed to be identically +inf (report use only)."""

    def __post_init__(self):
        vals = np.full(self.grid.shape, np.inf)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def _all_inf(grid: LatticeGrid) -> GridFn:
    return _InfGridFn(grid, np.full(grid.shape, np.inf), "rhs")


# ---------------------------------------------------------------- constrained form


def _constraint_indices(D: RatLinMap, T: LatticeGrid, U: LatticeGrid) -> np.ndarray:
    """Flat U index of ``D t`` for each t (exact; -1 off lattice or extent)."""
    try:
        return image_indices(D, T, U)
    except IncompatibleError:
        out = np.full(T.size, -1, dtype=np.int64)
        for i, t in enumerate(T.exact_points()):
            j = U.flat_index(D.apply(t))
            if j is not None:
                out[i] = j
        return out


def constrained_infconv(setup: ConstrainedSetup, max_cells: int = DEFAULT_MAX_CELLS) -> GridFn:
    """``h(x, u) = min {k(C x, t) : t on the T grid, D t = u}``.

    ``D t = u`` is decided exactly for each ``t``; ``h`` is ``+inf`` where no
    grid ``t`` satisfies it or ``C x`` leaves the W extent.
    """
    X, U, W, T = setup.x_grid, setup.u_grid, setup.w_grid, setup.t_grid
    _check_cells(X.size * T.size, max_cells, "the constrained inf-convolution")
    cx = image_indices(setup.C, X, W)
    dt = _constraint_indices(setup.D, T, U)
    K = _with_inf_row(setup.k.values.reshape(W.size, T.size))
    rows = K[cx]  # (nX, nT)
    h = np.full((X.size, U.size), np.inf)
    ok = dt >= 0
    np.minimum.at(h, (slice(None), dt[ok]), rows[:, ok])
    if not np.isfinite(h).any():
        raise ImproperError("constrained inf-convolution is identically +inf")
    grid = X.product(U)
    return GridFn(grid, h.reshape(grid.shape), "h")


def _kstar(setup: ConstrainedSetup) -> GridFn:
    if setup.kstar is not None:
        return setup.kstar
    return conjugate_fast(setup.k, setup.w_dual.product(setup.t_dual))


def constrained_dual_table(
    setup: ConstrainedSetup, kstar: GridFn | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """``min {k*(w*, D^T u0*) : C^T w* = x0*}`` at every ``(x0*, u0*)``.

    Returns values (``+inf`` when no grid ``w*`` is feasible) and the flat
    ``W*`` index of the first minimiser (``-1`` when none).
    """
    Xs, Us, Ws, Ts = setup.x_dual, setup.u_dual, setup.w_dual, setup.t_dual
    ks = kstar if kstar is not None else _kstar(setup)
    ctw = _constraint_indices(setup.C.T, Ws, Xs)  # (nW*,)
    dtu = _constraint_indices(setup.D.T, Us, Ts)  # (nU*,)
    KS = np.concatenate([ks.values.reshape(Ws.size, Ts.size),
                         np.full((Ws.size, 1), np.inf)], axis=1)
    sel = KS[:, dtu]  # (nW*, nU*)
    vals = np.full((Xs.size, Us.size), np.inf)
    wit = np.full((Xs.size, Us.size), -1, dtype=np.int64)
    order = np.argsort(ctw, kind="stable")
    groups = ctw[order]
    starts = np.searchsorted(groups, np.arange(Xs.size), side="left")
    ends = np.searchsorted(groups, np.arange(Xs.size), side="right")
    for x in range(Xs.size):
        members = order[starts[x] : ends[x]]  # ascending W* index
        if members.size == 0:
            continue
        block = sel[members]  # (m, nU*)
        j = np.argmin(block, axis=0)
        v = block[j, np.arange(Us.size)]
        vals[x] = v
        wit[x] = np.where(np.isfinite(v), members[j], -1)
    shape = setup.h_dual.shape
    return vals.reshape(shape) + 0.0, wit.reshape(shape)


def constrained_dual_min(
    setup: ConstrainedSetup, point, kstar: GridFn | None = None
) -> tuple[ExtReal, tuple[Fraction, ...] | None]:
    """Constrained min formula at one ``(x0*, u0*)`` with its ``w*`` witness.

    The witness is ``None`` (and the value ``+inf``) when no ``w*`` on the
    grid satisfies ``C^T w* = x0*`` with an on-grid ``D^T u0*``.
    """
    p = frac_vec(point)
    if setup.h_dual.flat_index(p) is None:
        raise ValueError(f"{p} is not a point of the X* x U* grid")
    dx = setup.x_grid.dim
    x0, u0 = p[:dx], p[dx:]
    ks = kstar if kstar is not None else _kstar(setup)
    dtu = setup.D.T.apply(u0)
    best, arg = INF, None
    for ws in setup.w_dual.exact_points():
        if setup.C.T.apply(ws) != x0:
            continue
        v = ks.at(tuple(ws) + dtu)
        if v < best:
            best, arg = v, tuple(ws)
    return best, arg


def verify_constrained_duality(
    setup: ConstrainedSetup,
    tol: float | None = None,
    max_cells: int = DEFAULT_MAX_CELLS,
    check_closed: bool = True,
    qualify: bool = True,
) -> DualityReport:
    """Constrained analogue of :func:`verify_coupled_duality`.

    The default tolerance is ``(L + 1) * delta`` where ``L`` is the largest
    axis slope of ``k``.  For a separable ``k`` (``setup.parts``) the slopes
    of the parts are added, since each part contributes its own grid
    conjugate; a lifted setup thus gets the same tolerance as its coupled
    original.
    """
    from .qualif import check_qualification_constrained

    h = constrained_infconv(setup, max_cells)
    lhs = conjugate_fast(h, setup.h_dual)
    ks = _kstar(setup)
    rhs, wit = constrained_dual_table(setup, ks)
    lhs, rhs, wit = _restrict(lhs, rhs, wit, setup.window)
    ext = max(_grid_extent(g) for g in (setup.k.grid, setup.x_grid, setup.u_grid)) * max(
        _grid_extent(g) for g in (setup.x_dual, setup.u_dual, setup.w_dual, setup.t_dual)
    )
    scale = max(_scale(setup.k.values, lhs.values, rhs), ext)
    allowance = weak_allowance(setup.k.dim + h.dim + 2, scale)
    weak_ok, margin, gap, worst = _compare(lhs, rhs, allowance)
    if tol is None:
        lip = sum(max_slope(p) for p in setup.parts) if setup.parts else max_slope(setup.k)
        tol = (lip + 1.0) * float(setup.max_step)
    qc = check_qualification_constrained(setup) if qualify else None
    hyp = {"qualification": qc.is_subspace if qc else None}
    if check_closed:
        parts = setup.parts or (setup.k,)
        hyp["k_closed"] = all(is_closed(p) for p in parts)
    return DualityReport(
        lhs=lhs,
        rhs=GridFn(lhs.grid, rhs, "rhs") if np.isfinite(rhs).any() else _all_inf(lhs.grid),
        witness=wit,
        witness_grid=setup.w_dual,
        max_gap=gap,
        worst_point=worst,
        weak_ok=weak_ok,
        weak_margin=margin,
        tolerance=float(tol),
        qualification=qc,
        hypotheses=hyp,
    )


# ---------------------------------------------------------------- lift


def _block_sum(a: GridFn, b: GridFn, da: int, db: int) -> np.ndarray:
    """``a(p, q) + b(r, s)`` laid out on axes ``(p, r, q, s)``."""
    sa, sb = a.grid.shape, b.grid.shape
    ea = sa[:da] + (1,) * db + sa[da:] + (1,) * (len(sb) - db)
    eb = (1,) * da + sb[:db] + (1,) * (len(sa) - da) + sb[db:]
    return a.values.reshape(ea) + b.values.reshape(eb)


def lifted_conjugate(setup: QuadSetup) -> GridFn:
    """Conjugate of the lifted function, assembled as ``f* + g*``.

    The lifted function is a separable sum, so its conjugate on
    ``(X* x Y*) x (U* x V*)`` is the sum of the two conjugates; forming it
    this way keeps both dual formulas on identical floating-point values.
    """
    fstar = conjugate_fast(setup.f, setup.f_dual)
    gstar = conjugate_fast(setup.g, setup.g_dual)
    grid = setup.x_dual.product(setup.y_dual, setup.u_dual, setup.v_dual)
    return GridFn(grid, _block_sum(fstar, gstar, setup.dx, setup.dy), "k*")


def lift_to_constrained(
    setup: QuadSetup, max_cells: int = DEFAULT_MAX_CELLS, separable_conjugate: bool = True
) -> ConstrainedSetup:
    """Recast a coupled setup in constrained form.

    ``W = X x Y``, ``T = U x V``, ``C x = (x, A x)``, ``D(u, v) = u + B v`` and
    ``k((x, y), (u, v)) = f(x, u) + g(y, v)`` with axes ordered
    ``(x, y, u, v)``.

    Parameters
    ----------
    max_cells : int
        Cap on the number of cells of the product grid.
    separable_conjugate : bool
        Attach :func:`lifted_conjugate` as ``kstar`` (default).  Otherwise
        ``k*`` is computed by direct conjugation when needed.
    """
    n = setup.f.grid.size * setup.g.grid.size
    _check_cells(n, max_cells, "the lifted product grid")
    X, Y, U, V = setup.x_grid, setup.y_grid, setup.u_grid, setup.v_grid
    grid = X.product(Y, U, V)
    k = GridFn(grid, _block_sum(setup.f, setup.g, setup.dx, setup.dy), "k")
    C = RatLinMap.identity(setup.dx).vstack(setup.A)
    D = RatLinMap.identity(setup.du).hstack(setup.B)
    return ConstrainedSetup(
        k=k,
        C=C,
        D=D,
        dw=setup.dx + setup.dy,
        x_grid=X,
        u_grid=U,
        x_dual=setup.x_dual,
        u_dual=setup.u_dual,
        w_dual=setup.x_dual.product(setup.y_dual),
        t_dual=setup.u_dual.product(setup.v_dual),
        kstar=lifted_conjugate(setup) if separable_conjugate else None,
        name=setup.name,
        window=setup.window,
        parts=(setup.f, setup.g),
    )


# ---------------------------------------------------------------- shear identity


def shear_preimage_sets(
    G: Iterable[Sequence],
    R: RatLinMap,
    box: LatticeGrid,
    max_points: int = 1 << 16,
) -> tuple[frozenset, frozenset, bool]:
    """Both sides of the shear identity, restricted to a finite box.

    With ``Q(x, z) = z - R x``:

    * ``lhs = {(x - x1, z - R x1) : (x, z) in G, x1 in X}`` intersected with
      ``box``, enumerating ``x1 = x - xi`` over the box's X coordinates;
    * ``rhs = {(xi, eta) in box : eta - R xi in Q(G)}``.

    Returns ``(lhs, rhs, lhs == rhs)``; all arithmetic is exact.
    """
    dx = R.cols
    dz = R.rows
    if box.dim != dx + dz:
        raise ValueError("box dimension must equal dim X + dim Z")
    pts = [frac_vec(p) for p in G]
    if not pts:
        raise ValueError("G must be nonempty")
    if any(len(p) != dx + dz for p in pts):
        raise ValueError("points of G must lie in X x Z")
    if box.size > max_points or len(pts) * box.sub(range(dx)).size > max_points:
        raise MemoryError("shear identity enumeration exceeds the size cap")
    xbox = list(box.sub(range(dx)).exact_points())
    zbox = set(box.sub(range(dx, dx + dz)).exact_points())
    # R is linear: R(x - xi) = R x - R xi, so R is applied once per point
    rx = {xi: R.apply(xi) for xi in xbox}
    lhs = set()
    for p in pts:
        x, z = p[:dx], p[dx:]
        base = tuple(a - b for a, b in zip(z, R.apply(x)))
        for xi in xbox:
            eta = tuple(a + b for a, b in zip(base, rx[xi]))
            if eta in zbox:
                lhs.add(tuple(xi) + eta)
    qg = {tuple(a - b for a, b in zip(p[dx:], R.apply(p[:dx]))) for p in pts}
    rhs = set()
    for xi in xbox:
        for eta in zbox:
            if tuple(a - b for a, b in zip(eta, rx[xi])) in qg:
                rhs.add(tuple(xi) + eta)
    return frozenset(lhs), frozenset(rhs), lhs == rhs


# ---------------------------------------------------------------- cross path


@dataclass(frozen=True)
class CrossPathReport:
    """Comparison of the coupled and the lifted constrained computations.

    ``primal_equal`` compares both inf-convolutions value for value and
    ``dual_equal`` both min-formula tables; ``*_mismatch`` give the first
    differing grid point when they disagree.
    """

    primal_equal: bool
    dual_equal: bool
    primal_mismatch: tuple[Fraction, ...] | None = None
    dual_mismatch: tuple[Fraction, ...] | None = None

    @property
    def ok(self) -> bool:
        return self.primal_equal and self.dual_equal


def _first_mismatch(grid: LatticeGrid, a: np.ndarray, b: np.ndarray):
    bad = np.flatnonzero(~((a == b) | (np.isinf(a) & np.isinf(b))).ravel())
    return None if bad.size == 0 else grid.exact_point(int(bad[0]))


def cross_path_check(setup: QuadSetup, max_cells: int = DEFAULT_MAX_CELLS) -> CrossPathReport:
    """Run a coupled setup through both formulations and compare exactly."""
    lifted = lift_to_constrained(setup, max_cells)
    h1 = coupled_infconv(setup, max_cells)
    h2 = constrained_infconv(lifted, max_cells)
    d1, _ = coupled_dual_table(setup, max_cells=max_cells)
    d2, _ = constrained_dual_table(lifted)
    pm = _first_mismatch(h1.grid, h1.values, h2.values)
    dm = _first_mismatch(setup.f_dual, d1, d2)
    return CrossPathReport(pm is None, dm is None, pm, dm)
