"""Legendre-Fenchel conjugation on lattice grids.

Two conjugation routines share one arithmetic contract.  For a primal point
``x`` and dual point ``s`` the candidate value is accumulated left to right,

    fl(...fl(fl(-f(x) + fl(x0*s0)) + fl(x1*s1)) ... + fl(x_{d-1}*s_{d-1})),

and the conjugate is the maximum of those candidates.  :func:`conjugate`
evaluates this directly.  :func:`conjugate_fast` maximises one axis at a
time; because ``a -> fl(a + c)`` is monotone, the per-axis maxima commute
with the remaining additions and the output is bitwise identical.

:func:`closure` returns the lower convex envelope of a sampled function at
its grid points (the biconjugate with an unrestricted dual), computed in
exact rational arithmetic.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .lp import EnvelopeSolver
from .numcore import ExtReal, GridFn, INF, LatticeGrid, frac_vec

__all__ = [
    "DualGridError",
    "conjugate",
    "conjugate_argmax",
    "conjugate_at",
    "conjugate_fast",
    "closure",
    "fy_gap",
    "slope_bounds",
    "max_slope",
    "bracketing_dual",
    "is_closed",
]

_CHUNK = 1 << 21
_UNIT = 2.0 ** -53
# line sizes above which the hull-based transform is used by method="auto"
_LLT_MIN_WORK = 1 << 22


class DualGridError(ValueError):
    """A dual grid does not cover the slopes a computation needs."""


def _check_dual(f: GridFn, dual: LatticeGrid) -> None:
    if dual.dim != f.grid.dim:
        raise ValueError(f"dual grid has dimension {dual.dim}, function has {f.grid.dim}")


def _candidates(negf: np.ndarray, X: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Candidate matrix (dual x primal) in the canonical accumulation order."""
    acc = negf[None, :] + S[:, 0:1] * X[None, :, 0]
    for j in range(1, X.shape[1]):
        acc = acc + S[:, j : j + 1] * X[None, :, j]
    return acc


def _brute(f: GridFn, dual: LatticeGrid, want_arg: bool):
    X, vals = f.finite_points()
    flat_idx = np.flatnonzero(f.dom_mask.ravel())
    negf = -vals
    S = dual.points()
    out = np.empty(S.shape[0])
    arg = np.empty(S.shape[0], dtype=np.int64) if want_arg else None
    rows = max(1, _CHUNK // max(1, X.shape[0]))
    for start in range(0, S.shape[0], rows):
        acc = _candidates(negf, X, S[start : start + rows])
        if want_arg:
            k = np.argmax(acc, axis=1)
            arg[start : start + rows] = flat_idx[k]
            out[start : start + rows] = acc[np.arange(acc.shape[0]), k]
        else:
            out[start : start + rows] = acc.max(axis=1)
    out = out + 0.0
    return out.reshape(dual.shape), arg


def conjugate(f: GridFn, dual: LatticeGrid) -> GridFn:
    """Conjugate by direct maximisation over the finite primal points.

    Parameters
    ----------
    f : GridFn
        Proper sampled function; ``+inf`` entries are skipped.
    dual : LatticeGrid
        Points at which the conjugate is evaluated.

    Returns
    -------
    GridFn
        ``s -> max_x <x, s> - f(x)`` on ``dual``; everywhere finite.

    Examples
    --------
    >>> g = LatticeGrid.from_bounds(-1, 1)
    >>> conjugate(GridFn(g, [1.0, 0.0, 1.0]), g).values
    array([0., 0., 0.])
    """
    _check_dual(f, dual)
    vals, _ = _brute(f, dual, False)
    return GridFn(dual, vals, f"{f.label}*" if f.label else "")


def conjugate_argmax(f: GridFn, dual: LatticeGrid) -> tuple[GridFn, np.ndarray]:
    """Conjugate plus, per dual point, the flat index of the maximiser.

    Ties go to the lexicographically smallest primal index.
    """
    _check_dual(f, dual)
    vals, arg = _brute(f, dual, True)
    return GridFn(dual, vals, f"{f.label}*" if f.label else ""), arg.reshape(dual.shape)


def conjugate_at(f: GridFn, s) -> float:
    """Conjugate at a single dual point, same arithmetic as :func:`conjugate`."""
    X, vals = f.finite_points()
    S = np.asarray([float(v) for v in frac_vec(s)])[None, :]
    if S.shape[1] != f.dim:
        raise ValueError("dual point has the wrong dimension")
    return float(_candidates(-vals, X, S).max()) + 0.0


def _pairwise_axis(a: np.ndarray, x: np.ndarray, s: np.ndarray) -> np.ndarray:
    """max over the last axis of fl(a + fl(x * s)), for every s."""
    prod = x[:, None] * s[None, :]
    return (a[..., :, None] + prod).max(axis=-2)


def _upper_hull(xs: list[Fraction], ys: list[Fraction]) -> list[int]:
    """Indices of the strict upper hull of points sorted by x."""
    hull: list[int] = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (xs[a] - xs[o]) * (ys[i] - ys[o]) - (ys[a] - ys[o]) * (xs[i] - xs[o])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def _llt_line(a: np.ndarray, x: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Hull-based 1-D transform with a certified rounding window.

    The exact maximiser of ``a_i + x_i s`` comes from the upper hull.  Every
    float candidate is within ``E`` of its exact value, so only points whose
    exact value is within ``2E`` of the exact maximum can win in floating
    point.  Those lie between the hull neighbours of the window of hull
    vertices whose float values are within ``4E`` of the hull maximiser; the
    window is scanned with the same arithmetic as the pairwise transform.
    """
    out = np.full(s.shape[0], -np.inf)
    fin = np.flatnonzero(np.isfinite(a))
    if fin.size == 0:
        return out
    af, xf = a[fin], x[fin]
    hull = _upper_hull([Fraction(float(v)) for v in xf], [Fraction(float(v)) for v in af])
    hx = [Fraction(float(xf[h])) for h in hull]
    ha = [Fraction(float(af[h])) for h in hull]
    # edge slopes are strictly decreasing along an upper hull
    edges = [(ha[j + 1] - ha[j]) / (hx[j + 1] - hx[j]) for j in range(len(hull) - 1)]
    err = 4.0 * _UNIT * (np.max(np.abs(af)) + np.max(np.abs(xf)) * np.max(np.abs(s)))
    slack = 4.0 * err
    hva = [float(af[h]) for h in hull]
    hxa = [float(xf[h]) for h in hull]
    j = 0
    for t, sv in enumerate(s):
        sf = Fraction(float(sv))
        while j < len(edges) and edges[j] + sf > 0:
            j += 1
        sv = float(sv)
        thresh = hva[j] + hxa[j] * sv - slack
        p = j
        while p > 0 and hva[p - 1] + hxa[p - 1] * sv >= thresh:
            p -= 1
        q = j
        while q < len(hull) - 1 and hva[q + 1] + hxa[q + 1] * sv >= thresh:
            q += 1
        lo = hull[max(p - 1, 0)]
        hi = hull[min(q + 1, len(hull) - 1)]
        out[t] = np.max(af[lo : hi + 1] + xf[lo : hi + 1] * sv)
    return out


def _llt_axis(a: np.ndarray, x: np.ndarray, s: np.ndarray) -> np.ndarray:
    lead = a.shape[:-1]
    flat = a.reshape(-1, a.shape[-1])
    res = np.empty((flat.shape[0], s.shape[0]))
    for r in range(flat.shape[0]):
        res[r] = _llt_line(flat[r], x, s)
    return res.reshape(lead + (s.shape[0],))


def conjugate_fast(f: GridFn, dual: LatticeGrid, method: str = "auto") -> GridFn:
    """Axis-by-axis conjugate, bitwise equal to :func:`conjugate`.

    Parameters
    ----------
    f, dual
        As for :func:`conjugate`.
    method : {"auto", "pairwise", "llt"}
        One-dimensional kernel.  ``"pairwise"`` takes the vectorised maximum
        over each line; ``"llt"`` uses the upper hull of each line with a
        certified rounding window.  ``"auto"`` picks the hull kernel only
        for very long lines.
    """
    _check_dual(f, dual)
    if method not in ("auto", "pairwise", "llt"):
        raise ValueError(f"unknown method {method!r}")
    acc = -f.values
    d = f.dim
    # After processing axis j the array has dual axes 0..j then primal j+1..
    for j in range(d):
        x = f.grid.axis(j)
        s = dual.axis(j)
        moved = np.moveaxis(acc, j, -1)
        use_llt = method == "llt" or (
            method == "auto" and x.size * s.size >= _LLT_MIN_WORK and x.size >= 64
        )
        res = _llt_axis(moved, x, s) if use_llt else _pairwise_axis(moved, x, s)
        acc = np.moveaxis(res, -1, j)
    out = np.ascontiguousarray(acc) + 0.0
    return GridFn(dual, out, f"{f.label}*" if f.label else "")


# ---------------------------------------------------------------- slopes


def _axis_quotients(f: GridFn, axis: int) -> list[Fraction]:
    """Exact difference quotients near the float extremes along ``axis``.

    Only candidates whose float quotient lies within a rounding slack of the
    float minimum or maximum are converted, so the exact extremes are among
    the returned values.
    """
    v = np.moveaxis(f.values, axis, -1)
    a, b = v[..., :-1].ravel(), v[..., 1:].ravel()
    ok = np.isfinite(a) & np.isfinite(b)
    if not ok.any():
        return []
    a, b = a[ok], b[ok]
    h = f.grid.step[axis]
    q = (b - a) / float(h)
    slack = 16 * np.finfo(float).eps * (np.maximum(np.abs(a), np.abs(b)).max() / float(h) + 1.0)
    near = (q <= q.min() + slack) | (q >= q.max() - slack)
    return [(Fraction(float(y)) - Fraction(float(x))) / h for x, y in zip(a[near], b[near])]


def slope_bounds(f: GridFn) -> list[tuple[Fraction, Fraction] | None]:
    """Per-axis (min, max) of difference quotients between adjacent finite
    samples; ``None`` for an axis with no adjacent finite pair."""
    res = []
    for ax in range(f.dim):
        q = _axis_quotients(f, ax)
        res.append((min(q), max(q)) if q else None)
    return res


def max_slope(f: GridFn) -> float:
    """Largest absolute axis-adjacent difference quotient (0 if none)."""
    best = Fraction(0)
    for b in slope_bounds(f):
        if b is not None:
            best = max(best, abs(b[0]), abs(b[1]))
    return float(best)


def _frac_gcd(vals: Sequence[Fraction]) -> Fraction:
    num = 0
    den = 1
    for v in vals:
        num = math.gcd(num, v.numerator)
        den = den * v.denominator // math.gcd(den, v.denominator)
    return Fraction(num, den) if num else Fraction(0)


def bracketing_dual(f: GridFn, max_points: int = 257, margin: int = 1) -> LatticeGrid:
    """A dual grid whose range covers every axis-adjacent slope of ``f``.

    The step on each axis is the gcd of that axis' difference quotients when
    that keeps the axis within ``max_points`` points; otherwise the range is
    split evenly into ``max_points - 1`` intervals.  ``margin`` extra points
    pad each side.
    """
    lo, hi, step = [], [], []
    for ax, b in enumerate(slope_bounds(f)):
        if b is None:
            step.append(Fraction(1))
            lo.append(-margin)
            hi.append(margin)
            continue
        smin, smax = b
        q = _axis_quotients(f, ax)
        g = _frac_gcd(q)
        if g == 0:
            g = Fraction(1)
        span = smax - smin
        if span / g + 1 + 2 * margin > max_points:
            g = span / (max_points - 1 - 2 * margin) if span else Fraction(1)
        step.append(g)
        lo.append(math.floor(smin / g) - margin)
        hi.append(math.ceil(smax / g) + margin)
    return LatticeGrid((Fraction(0),) * f.dim, tuple(step), tuple(lo), tuple(hi))


def _check_bracket(f: GridFn, dual: LatticeGrid) -> None:
    for ax, b in enumerate(slope_bounds(f)):
        if b is None:
            continue
        a = dual.axis_exact(ax)
        if b[0] < a[0] or b[1] > a[-1]:
            raise DualGridError(
                f"axis {ax}: slopes span [{b[0]}, {b[1]}] but the dual grid covers "
                f"[{a[0]}, {a[-1]}]"
            )


# ---------------------------------------------------------------- closure


def _envelope_1d(f: GridFn) -> list[Fraction | None]:
    xs = f.grid.axis_exact(0)
    pts = [(xs[i], Fraction(float(v))) for i, v in enumerate(f.values) if math.isfinite(v)]
    hull: list[tuple[Fraction, Fraction]] = []
    for p in pts:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    out: list[Fraction | None] = []
    k = 0
    for x in xs:
        if x < hull[0][0] or x > hull[-1][0]:
            out.append(None)
            continue
        while k < len(hull) - 1 and hull[k + 1][0] < x:
            k += 1
        if x == hull[k][0] or len(hull) == 1:
            out.append(hull[k][1])
            continue
        (x0, y0), (x1, y1) = hull[k], hull[k + 1]
        out.append(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    return out


def _envelope_nd(f: GridFn) -> list[Fraction | None]:
    # Work in integer lattice indices; the envelope commutes with the
    # per-axis affine change of coordinates.
    idx = f.grid.indices()
    mask = f.dom_mask.ravel()
    cols = idx[mask]
    vals = [Fraction(float(v)) for v in f.values.ravel()[mask]]
    # integer-scale the costs so pivots stay in small rationals
    den = 1
    for v in vals:
        den = den * v.denominator // math.gcd(den, v.denominator)
    cost = [int(v * den) for v in vals]
    A_cols = [tuple(int(c) for c in col) + (1,) for col in cols]
    solver = EnvelopeSolver(A_cols, cost)
    out: list[Fraction | None] = []
    for p, k in enumerate(idx):
        if mask[p] and len(cols) == 1:
            out.append(vals[0])
            continue
        v = solver.solve([int(c) for c in k] + [1])
        out.append(None if v is None else v / den)
    return out


def _snap_tol(f: GridFn) -> np.ndarray:
    mag = np.where(f.dom_mask, np.abs(f.values), 0.0)
    return 4.0 * np.finfo(float).eps * np.maximum(mag, 1.0)


def closure(f: GridFn, dual: LatticeGrid | None = None, tol: float | None = None) -> GridFn:
    """Closed convex hull of a sampled function, restricted to its grid.

    Parameters
    ----------
    f : GridFn
        Proper sampled function.
    dual : LatticeGrid, optional
        When given, the closure is the biconjugate through this dual grid,
        which must bracket every axis-adjacent slope of ``f``
        (:class:`DualGridError` otherwise).  When omitted the exact lower
        convex envelope is used.
    tol : float, optional
        Values within ``tol`` above the envelope are kept as they are, which
        makes the operation idempotent in floating point.  Defaults to four
        machine epsilons relative to ``max(|f|, 1)``.

    Returns
    -------
    GridFn
        ``+inf`` outside the convex hull of ``dom f``, otherwise
        ``min(f, envelope)`` with the snapping rule above.

    Examples
    --------
    >>> g = LatticeGrid.from_bounds(-1, 1)
    >>> closure(GridFn(g, [0.0, 1.0, 0.0])).values
    array([0., 0., 0.])
    """
    tol_arr = _snap_tol(f) if tol is None else np.full(f.grid.shape, float(tol))
    if dual is not None:
        _check_bracket(f, dual)
        fs = conjugate_fast(f, dual)
        env = conjugate_fast(fs, f.grid).values
        inside = _inside_hull(f)
        env = np.where(inside, env, np.inf)
    else:
        ex = _envelope_1d(f) if f.dim == 1 else _envelope_nd(f)
        env = np.array([math.inf if v is None else float(v) for v in ex]).reshape(f.grid.shape)
    fv = f.values
    keep = np.isfinite(fv) & (env >= fv - tol_arr)
    out = np.where(keep, fv, np.minimum(fv, env))
    return GridFn(f.grid, out, f"cl {f.label}" if f.label else "")


def _inside_hull(f: GridFn) -> np.ndarray:
    mask = f.dom_mask
    if mask.all():
        return mask
    if f.dim == 1:
        fin = np.flatnonzero(mask)
        out = np.zeros_like(mask)
        out[fin[0] : fin[-1] + 1] = True
        return out
    from .lp import in_convex_hull

    verts = [tuple(int(c) for c in k) for k in f.grid.indices()[mask.ravel()]]
    res = [bool(m) or in_convex_hull(tuple(int(c) for c in k), verts)
           for m, k in zip(mask.ravel(), f.grid.indices())]
    return np.array(res).reshape(mask.shape)


def is_closed(f: GridFn, tol: float | None = None) -> bool:
    """True iff ``f`` equals its closure on the grid (within the snapping rule)."""
    c = closure(f, tol=tol)
    return bool(np.array_equal(c.values, f.values))


def fy_gap(f: GridFn, x, s, dual: LatticeGrid | None = None) -> ExtReal:
    """Fenchel-Young gap ``f(x) + f*(s) - <x, s>``.

    ``x`` must be a point of ``f``'s grid; ``s`` must lie on ``dual`` when
    one is given.  ``f*(s)`` uses the same arithmetic as :func:`conjugate`.
    """
    if f.grid.flat_index(x) is None:
        raise ValueError(f"{tuple(x)} is not a point of the primal grid")
    if dual is not None and dual.flat_index(s) is None:
        raise ValueError(f"{tuple(s)} is not a point of the dual grid")
    fx = f.at(x)
    if fx.is_inf:
        return INF
    xs = [float(v) for v in frac_vec(x)]
    ss = [float(v) for v in frac_vec(s)]
    pair = sum(a * b for a, b in zip(xs, ss))
    return ExtReal(fx.value + conjugate_at(f, s) - pair)
