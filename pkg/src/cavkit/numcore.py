"""Foundational types: extended reals, lattice grids, rational maps, polytopes.

Grid geometry (origins, steps, map entries, polytope vertices) is held in
exact rational arithmetic so lattice membership is decidable without a
tolerance.  Function values are 64-bit floats; inside arrays ``+inf`` marks
points outside the effective domain and ``-inf`` / NaN are rejected.

Grid points are enumerated in row-major (C) order: the last axis varies
fastest.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .lp import in_convex_hull

__all__ = [
    "ImproperError",
    "IncompatibleError",
    "ExtReal",
    "INF",
    "LatticeGrid",
    "GridFn",
    "RatLinMap",
    "Polytope",
    "frac",
    "frac_vec",
    "grid_compatible",
    "lattice_affine",
]


class ImproperError(ValueError):
    """A function took the value -inf or is identically +inf."""


class IncompatibleError(ValueError):
    """A rational map does not carry a grid onto a target lattice."""


def frac(v) -> Fraction:
    """Convert ints, Fractions, floats and strings like ``'1/2'`` exactly."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            raise ValueError(f"non-finite rational coordinate {v!r}")
        return Fraction(float(v))
    if isinstance(v, str):
        return Fraction(v.strip())
    raise TypeError(f"cannot interpret {v!r} as a rational")


def frac_vec(vs) -> tuple[Fraction, ...]:
    if isinstance(vs, (int, float, str, Fraction, np.integer, np.floating)):
        return (frac(vs),)
    return tuple(frac(v) for v in vs)


class ExtReal:
    """An element of ]-inf, +inf].

    ``+inf`` is a distinct state (``value is None``), never a float sentinel.
    Any operation that would produce ``-inf`` raises :class:`ImproperError`.
    """

    __slots__ = ("_v",)

    def __init__(self, value):
        if isinstance(value, ExtReal):
            self._v = value._v
            return
        if value is None:
            self._v = None
            return
        v = float(value)
        if math.isnan(v):
            raise ValueError("NaN is not an extended real")
        if v == -math.inf:
            raise ImproperError("-inf is not an admissible value")
        self._v = None if v == math.inf else v

    @classmethod
    def inf(cls) -> "ExtReal":
        return cls(None)

    @property
    def is_inf(self) -> bool:
        return self._v is None

    @property
    def is_finite(self) -> bool:
        return self._v is not None

    @property
    def value(self) -> float | None:
        return self._v

    def __float__(self) -> float:
        return math.inf if self._v is None else self._v

    def __add__(self, other) -> "ExtReal":
        o = ExtReal(other)
        if self._v is None or o._v is None:
            return INF
        return ExtReal(self._v + o._v)

    __radd__ = __add__

    def __sub__(self, other) -> "ExtReal":
        o = ExtReal(other)
        if o._v is None:
            raise ImproperError("subtracting +inf would leave ]-inf, inf]")
        if self._v is None:
            return INF
        return ExtReal(self._v - o._v)

    def __neg__(self):
        if self._v is None:
            raise ImproperError("negating +inf gives -inf")
        return ExtReal(-self._v)

    def _key(self, other) -> tuple[float, float]:
        return float(self), float(ExtReal(other))

    def __eq__(self, other):
        try:
            a, b = self._key(other)
        except (TypeError, ValueError):
            return NotImplemented
        return a == b

    def __lt__(self, other):
        a, b = self._key(other)
        return a < b

    def __le__(self, other):
        a, b = self._key(other)
        return a <= b

    def __gt__(self, other):
        a, b = self._key(other)
        return a > b

    def __ge__(self, other):
        a, b = self._key(other)
        return a >= b

    def __hash__(self):
        return hash(float(self))

    def __repr__(self):
        return "ExtReal(+inf)" if self._v is None else f"ExtReal({self._v!r})"


INF = ExtReal(None)


@dataclass(frozen=True)
class LatticeGrid:
    """Finite box of the lattice ``origin + step * k``, ``k`` integer.

    ``lo`` and ``hi`` are inclusive integer index bounds per axis.
    """

    origin: tuple[Fraction, ...]
    step: tuple[Fraction, ...]
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "origin", frac_vec(self.origin))
        object.__setattr__(self, "step", frac_vec(self.step))
        object.__setattr__(self, "lo", tuple(int(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(int(v) for v in self.hi))
        d = len(self.origin)
        if d == 0:
            raise ValueError("grid dimension must be positive")
        if not (len(self.step) == len(self.lo) == len(self.hi) == d):
            raise ValueError("origin, step, lo, hi must have equal lengths")
        if any(s <= 0 for s in self.step):
            raise ValueError("grid steps must be positive")
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise ValueError("empty index range")

    @classmethod
    def from_bounds(cls, lower, upper, step=1) -> "LatticeGrid":
        """Grid with origin 0 covering ``[lower, upper]`` per axis.

        >>> LatticeGrid.from_bounds(-1, 1).shape
        (3,)
        """
        lower, upper = frac_vec(lower), frac_vec(upper)
        d = len(lower)
        steps = frac_vec(step)
        if len(steps) == 1 and d > 1:
            steps = steps * d
        lo, hi = [], []
        for a, b, s in zip(lower, upper, steps):
            qa, qb = a / s, b / s
            if qa.denominator != 1 or qb.denominator != 1:
                raise ValueError(f"bounds {a}, {b} are not multiples of step {s}")
            lo.append(int(qa))
            hi.append(int(qb))
        return cls((Fraction(0),) * d, steps, tuple(lo), tuple(hi))

    @property
    def dim(self) -> int:
        return len(self.origin)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    @cached_property
    def _axes(self) -> tuple[np.ndarray, ...]:
        out = []
        for o, s, l, h in zip(self.origin, self.step, self.lo, self.hi):
            a = np.array([float(o + s * k) for k in range(l, h + 1)])
            a.setflags(write=False)
            out.append(a)
        return tuple(out)

    def axis(self, i: int) -> np.ndarray:
        """Float coordinates along axis ``i`` (ascending)."""
        return self._axes[i]

    def axis_exact(self, i: int) -> list[Fraction]:
        o, s = self.origin[i], self.step[i]
        return [o + s * k for k in range(self.lo[i], self.hi[i] + 1)]

    @cached_property
    def _points(self) -> np.ndarray:
        mesh = np.meshgrid(*self._axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        pts.setflags(write=False)
        return pts

    def points(self) -> np.ndarray:
        """All grid points as a ``(size, dim)`` float array, row-major."""
        return self._points

    @cached_property
    def _indices(self) -> np.ndarray:
        rng = [np.arange(l, h + 1) for l, h in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*rng, indexing="ij")
        idx = np.stack([m.ravel() for m in mesh], axis=1).astype(np.int64)
        idx.setflags(write=False)
        return idx

    def indices(self) -> np.ndarray:
        """Absolute integer lattice indices of all points, row-major."""
        return self._indices

    def exact_point(self, flat: int) -> tuple[Fraction, ...]:
        k = np.unravel_index(int(flat), self.shape)
        return tuple(o + s * (l + int(i)) for o, s, l, i in zip(self.origin, self.step, self.lo, k))

    def exact_points(self) -> Iterable[tuple[Fraction, ...]]:
        return itertools.product(*(self.axis_exact(i) for i in range(self.dim)))

    def lattice_index(self, point) -> tuple[int, ...] | None:
        """Absolute lattice index of ``point``, or None if off-lattice."""
        p = frac_vec(point)
        if len(p) != self.dim:
            raise ValueError(f"point of dimension {len(p)} on a {self.dim}-d grid")
        out = []
        for v, o, s in zip(p, self.origin, self.step):
            q = (v - o) / s
            if q.denominator != 1:
                return None
            out.append(int(q))
        return tuple(out)

    def flat_index(self, point) -> int | None:
        """Row-major position of ``point`` in this grid, or None."""
        k = self.lattice_index(point)
        if k is None:
            return None
        if any(i < l or i > h for i, l, h in zip(k, self.lo, self.hi)):
            return None
        return int(np.ravel_multi_index(tuple(i - l for i, l in zip(k, self.lo)), self.shape))

    def contains(self, point) -> bool:
        return self.flat_index(point) is not None

    def flat_from_lattice(self, k: np.ndarray) -> np.ndarray:
        """Vectorised absolute-index -> flat index; -1 where out of extent."""
        k = np.asarray(k, dtype=np.int64)
        lo = np.asarray(self.lo, dtype=np.int64)
        hi = np.asarray(self.hi, dtype=np.int64)
        ok = np.all((k >= lo) & (k <= hi), axis=-1)
        rel = np.where(ok[..., None], k - lo, 0)
        flat = np.ravel_multi_index(tuple(np.moveaxis(rel, -1, 0)), self.shape)
        return np.where(ok, flat, -1)

    def sub(self, axes: Sequence[int]) -> "LatticeGrid":
        axes = list(axes)
        return LatticeGrid(
            tuple(self.origin[i] for i in axes),
            tuple(self.step[i] for i in axes),
            tuple(self.lo[i] for i in axes),
            tuple(self.hi[i] for i in axes),
        )

    def product(self, *others: "LatticeGrid") -> "LatticeGrid":
        grids = (self,) + others
        return LatticeGrid(
            sum((g.origin for g in grids), ()),
            sum((g.step for g in grids), ()),
            sum((g.lo for g in grids), ()),
            sum((g.hi for g in grids), ()),
        )

    def difference_lattice(self) -> "LatticeGrid":
        """Same steps and extent, origin moved to 0 (the translation group)."""
        return LatticeGrid((Fraction(0),) * self.dim, self.step, self.lo, self.hi)

    @property
    def max_step(self) -> Fraction:
        return max(self.step)

    def __repr__(self):
        axes = []
        for i in range(self.dim):
            a = self.axis_exact(i)
            axes.append(f"[{a[0]}..{a[-1]} step {self.step[i]}]")
        return "LatticeGrid(" + " x ".join(axes) + ")"


@dataclass(frozen=True, eq=False)
class GridFn:
    """Extended-real function sampled on a lattice grid.

    ``values`` has shape ``grid.shape``; ``+inf`` entries lie outside the
    effective domain.  Off-grid lattice points are treated as ``+inf``.
    """

    grid: LatticeGrid
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            if vals.size == self.grid.size:
                vals = vals.reshape(self.grid.shape)
            else:
                raise ValueError(f"{vals.size} values for a grid with {self.grid.size} points")
        if np.isnan(vals).any():
            raise ValueError(f"{self.label or 'function'} has NaN values")
        if np.isneginf(vals).any():
            flat = int(np.flatnonzero(np.isneginf(vals))[0])
            raise ImproperError(
                f"{self.label or 'function'} takes -inf at {self.grid.exact_point(flat)}"
            )
        if not np.isfinite(vals).any():
            raise ImproperError(f"{self.label or 'function'} is identically +inf")
        vals = vals + 0.0  # normalise -0.0
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, grid: LatticeGrid, fn: Callable[[np.ndarray], np.ndarray], label=""):
        """Sample ``fn`` at the float coordinates of every grid point."""
        pts = grid.points()
        return cls(grid, np.asarray(fn(pts), dtype=np.float64).reshape(grid.shape), label)

    @classmethod
    def from_exact(cls, grid: LatticeGrid, fn: Callable[[tuple[Fraction, ...]], object], label=""):
        """Sample ``fn`` at exact rational grid points; ``fn`` may return
        Fractions, floats or ``math.inf``."""
        vals = [float(fn(p)) for p in grid.exact_points()]
        return cls(grid, np.array(vals).reshape(grid.shape), label)

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def dom_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    def at(self, point) -> ExtReal:
        i = self.grid.flat_index(point)
        if i is None:
            return INF
        return ExtReal(self.values.flat[i])

    def __call__(self, point) -> ExtReal:
        return self.at(point)

    def finite_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Float coordinates and values of the finite entries."""
        m = self.dom_mask.ravel()
        return self.grid.points()[m], self.values.ravel()[m]

    def relabel(self, label: str) -> "GridFn":
        return GridFn(self.grid, self.values, label)

    def transpose_blocks(self, split: int) -> "GridFn":
        """Swap the first ``split`` axes with the remaining ones."""
        d = self.dim
        order = list(range(split, d)) + list(range(split))
        return GridFn(self.grid.sub(order), np.transpose(self.values, order), self.label)

    def __repr__(self):
        n = int(self.dom_mask.sum())
        return f"GridFn({self.label!r}, {self.grid!r}, finite at {n}/{self.grid.size})"


@dataclass(frozen=True)
class RatLinMap:
    """Rational matrix acting on column vectors."""

    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(frac_vec(r) for r in self.entries)
        if not rows or not rows[0]:
            raise ValueError("maps between zero-dimensional spaces are not allowed")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("ragged matrix")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def identity(cls, n: int) -> "RatLinMap":
        return cls(tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)))

    @classmethod
    def scalar(cls, c, n: int = 1) -> "RatLinMap":
        c = frac(c)
        return cls(tuple(tuple(c if i == j else Fraction(0) for j in range(n)) for i in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RatLinMap":
        return cls(tuple((Fraction(0),) * cols for _ in range(rows)))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def T(self) -> "RatLinMap":
        return RatLinMap(tuple(zip(*self.entries)))

    def apply(self, vec) -> tuple[Fraction, ...]:
        v = frac_vec(vec)
        if len(v) != self.cols:
            raise ValueError(f"vector of length {len(v)} for a map with {self.cols} columns")
        return tuple(sum((a * b for a, b in zip(row, v)), Fraction(0)) for row in self.entries)

    __call__ = apply

    def to_float(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries])

    def hstack(self, other: "RatLinMap") -> "RatLinMap":
        if self.rows != other.rows:
            raise ValueError("row mismatch in hstack")
        return RatLinMap(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def vstack(self, other: "RatLinMap") -> "RatLinMap":
        if self.cols != other.cols:
            raise ValueError("column mismatch in vstack")
        return RatLinMap(self.entries + other.entries)

    def block_diag(self, other: "RatLinMap") -> "RatLinMap":
        top = self.hstack(RatLinMap.zeros(self.rows, other.cols))
        bottom = RatLinMap.zeros(other.rows, self.cols).hstack(other)
        return top.vstack(bottom)

    def __matmul__(self, other: "RatLinMap") -> "RatLinMap":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in composition")
        cols = other.T.entries
        return RatLinMap(
            tuple(tuple(sum((a * b for a, b in zip(r, c)), Fraction(0)) for c in cols) for r in self.entries)
        )

    def __repr__(self):
        body = "; ".join(" ".join(str(v) for v in r) for r in self.entries)
        return f"RatLinMap([{body}])"


def lattice_affine(M: RatLinMap, src: LatticeGrid, dst: LatticeGrid) -> tuple[np.ndarray, np.ndarray]:
    """Integer affine action of ``M`` in lattice-index coordinates.

    Returns ``(c, N)`` with ``dst`` index of ``M(src point k) = c + N k``
    for every absolute index ``k`` in the extent of ``src``.  Axes of ``src``
    holding a single point are folded into ``c``.  Raises
    :class:`IncompatibleError` when some image leaves the lattice of ``dst``.
    """
    if M.cols != src.dim or M.rows != dst.dim:
        raise ValueError(
            f"map is {M.rows}x{M.cols} but grids have dims {src.dim} -> {dst.dim}"
        )
    c = []
    N = []
    for r in range(M.rows):
        row = M.entries[r]
        cr = (sum((a * o for a, o in zip(row, src.origin)), Fraction(0)) - dst.origin[r]) / dst.step[r]
        nr = [a * s / dst.step[r] for a, s in zip(row, src.step)]
        for j in range(src.dim):
            if src.lo[j] == src.hi[j]:
                cr += nr[j] * src.lo[j]
                nr[j] = Fraction(0)
        c.append(cr)
        N.append(nr)
    for r in range(M.rows):
        base = c[r] + sum((N[r][j] * src.lo[j] for j in range(src.dim)), Fraction(0))
        if base.denominator != 1 or any(v.denominator != 1 for v in N[r]):
            raise IncompatibleError(
                f"image of {src!r} under {M!r} leaves the lattice of {dst!r} (row {r})"
            )
    c_arr = np.array([int(v) for v in c], dtype=np.int64)
    N_arr = np.array([[int(v) for v in row] for row in N], dtype=np.int64).reshape(M.rows, src.dim)
    return c_arr, N_arr


def grid_compatible(M: RatLinMap, src: LatticeGrid, dst: LatticeGrid) -> bool:
    """True iff every point of ``src`` maps onto the (infinite) lattice of ``dst``.

    Exact rational check; no tolerance.  Dimension mismatches raise.
    """
    try:
        lattice_affine(M, src, dst)
    except IncompatibleError:
        return False
    return True


def image_indices(M: RatLinMap, src: LatticeGrid, dst: LatticeGrid) -> np.ndarray:
    """Flat ``dst`` index of ``M p`` for every ``src`` point (row-major); -1 off extent."""
    c, N = lattice_affine(M, src, dst)
    k = src.indices() @ N.T + c
    return dst.flat_from_lattice(k)


@dataclass(frozen=True)
class Polytope:
    """Convex hull of finitely many rational vertices."""

    vertices: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        verts = tuple(frac_vec(v) for v in self.vertices)
        if not verts:
            raise ValueError("a polytope needs at least one vertex")
        d = len(verts[0])
        if d == 0 or any(len(v) != d for v in verts):
            raise ValueError("vertices must share a positive dimension")
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def interval(cls, lo, hi) -> "Polytope":
        return cls(((frac(lo),), (frac(hi),)))

    @classmethod
    def point(cls, p) -> "Polytope":
        return cls((frac_vec(p),))

    @classmethod
    def box(cls, lower, upper) -> "Polytope":
        lower, upper = frac_vec(lower), frac_vec(upper)
        return cls(tuple(itertools.product(*zip(lower, upper))))

    @property
    def dim(self) -> int:
        return len(self.vertices[0])

    @cached_property
    def _vf(self) -> np.ndarray:
        return np.array([[float(c) for c in v] for v in self.vertices])

    def support(self, s):
        """``sup <K, s>``.  Exact when ``s`` is rational, float otherwise."""
        if isinstance(s, np.ndarray) and s.dtype.kind == "f":
            return float(np.max(self._vf @ s))
        sv = frac_vec(s)
        return max(sum((a * b for a, b in zip(v, sv)), Fraction(0)) for v in self.vertices)

    def min_pairing(self, s) -> Fraction:
        sv = frac_vec(s)
        return min(sum((a * b for a, b in zip(v, sv)), Fraction(0)) for v in self.vertices)

    def contains(self, x) -> bool:
        """Exact convex-combination membership."""
        return in_convex_hull(frac_vec(x), self.vertices)

    def __neg__(self) -> "Polytope":
        return Polytope(tuple(tuple(-c for c in v) for v in self.vertices))

    def __repr__(self):
        return "Polytope(" + ", ".join("(" + ", ".join(str(c) for c in v) + ")" for v in self.vertices) + ")"
