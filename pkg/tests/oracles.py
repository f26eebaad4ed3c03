"""Independent reference computations for the test-suite.

Everything here is written from the definitions with plain loops and exact
``Fraction`` arithmetic, without calling the package's algorithms.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from cavkit.numcore import GridFn, LatticeGrid, RatLinMap


def points(g: LatticeGrid):
    """Exact grid points in row-major order, from origin, step and index box."""
    ranges = [range(lo, hi + 1) for lo, hi in zip(g.lo, g.hi)]
    for k in itertools.product(*ranges):
        yield tuple(o + s * i for o, s, i in zip(g.origin, g.step, k))


def table(f: GridFn) -> dict:
    """``point -> Fraction`` for the finite entries of ``f``."""
    vals = f.values.ravel()
    return {p: Fraction(float(v)) for p, v in zip(points(f.grid), vals) if math.isfinite(v)}


def dot(a, b) -> Fraction:
    return sum((Fraction(x) * Fraction(y) for x, y in zip(a, b)), Fraction(0))


def conjugate_exact(f: GridFn, dual: LatticeGrid) -> list[Fraction]:
    """``max_x <x, s> - f(x)`` in exact arithmetic, per dual point."""
    t = table(f)
    return [max(dot(x, s) - v for x, v in t.items()) for s in points(dual)]


def lower_hull_1d(xs: list[Fraction], ys: list[Fraction]) -> list[Fraction]:
    """Lower convex envelope at each ``xs`` by testing every chord (cubic)."""
    out = []
    for x in xs:
        best = min(y for xi, y in zip(xs, ys) if xi == x)
        for (a, ya), (b, yb) in itertools.combinations(list(zip(xs, ys)), 2):
            if a < x < b or b < x < a:
                t = (x - a) / (b - a)
                best = min(best, ya + t * (yb - ya))
        out.append(best)
    return out


def coupled_infconv_exact(f: GridFn, g: GridFn, A: RatLinMap, B: RatLinMap, dx: int, dy: int) -> dict:
    """``h(x, u) = min_v f(x, u - B v) + g(A x, v)`` over grid ``v``; ``None`` for +inf."""
    tf, tg = table(f), table(g)
    vs = list(points(g.grid.sub(range(dy, g.dim))))
    out = {}
    for p in points(f.grid):
        x, u = p[:dx], p[dx:]
        ax = A.apply(x)
        best = None
        for v in vs:
            bv = B.apply(v)
            a = tf.get(tuple(x) + tuple(ui - bi for ui, bi in zip(u, bv)))
            b = tg.get(tuple(ax) + tuple(v))
            if a is None or b is None:
                continue
            if best is None or a + b < best:
                best = a + b
        out[p] = best
    return out


def solve(rows: list[list[Fraction]], rhs: list[Fraction]):
    """Exact solution of a square nonsingular system, or ``None`` if singular."""
    n = len(rows)
    M = [list(map(Fraction, r)) + [Fraction(b)] for r, b in zip(rows, rhs)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return None
        M[c], M[piv] = M[piv], M[c]
        for r in range(n):
            if r != c and M[r][c] != 0:
                k = M[r][c] / M[c][c]
                M[r] = [a - k * b for a, b in zip(M[r], M[c])]
    return [M[i][n] / M[i][i] for i in range(n)]


def rank(vectors) -> int:
    M = [list(map(Fraction, v)) for v in vectors]
    r = 0
    cols = len(M[0]) if M else 0
    for c in range(cols):
        piv = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                k = M[i][c] / M[r][c]
                M[i] = [a - k * b for a, b in zip(M[i], M[r])]
        r += 1
    return r


def in_cone(target, gens) -> bool:
    """Carathéodory search: ``target`` is a nonnegative combination of some
    linearly independent subset of ``gens``."""
    target = [Fraction(t) for t in target]
    if all(t == 0 for t in target):
        return True
    dim = len(target)
    for k in range(1, min(len(gens), dim) + 1):
        for sub in itertools.combinations(gens, k):
            if rank(sub) < k:
                continue
            # least-squares-free exact test: pick k independent coordinates
            for coords in itertools.combinations(range(dim), k):
                rows = [[Fraction(g[c]) for g in sub] for c in coords]
                if rank(rows) < k:
                    continue
                lam = solve(rows, [target[c] for c in coords])
                if lam is None or any(v < 0 for v in lam):
                    break
                if all(sum(l * Fraction(g[c]) for l, g in zip(lam, sub)) == target[c] for c in range(dim)):
                    return True
                break
    return False


def cone_is_subspace_oracle(gens) -> bool:
    """The cone is a subspace iff it contains the negative of every generator."""
    gens = [tuple(Fraction(v) for v in g) for g in gens if any(Fraction(v) != 0 for v in g)]
    return all(in_cone([-v for v in g], gens) for g in gens)


def is_monotone_oracle(pairs) -> bool:
    pairs = list(pairs)
    for (x, s), (y, t) in itertools.combinations(pairs, 2):
        if dot([a - b for a, b in zip(x, y)], [a - b for a, b in zip(s, t)]) < 0:
            return False
    return True


def parallel_sum_oracle(S, T) -> set:
    """``{(a + b, s) : (a, s) in S, (b, s) in T}`` by double loop."""
    out = set()
    for a, s in S:
        for b, t in T:
            if tuple(s) == tuple(t):
                out.add((tuple(Fraction(x) + Fraction(y) for x, y in zip(a, b)), tuple(s)))
    return out


def random_gridfn(rng: np.random.Generator, dims: int, max_pts: int = 9, inf_rate: float = 0.0,
                  step=None) -> GridFn:
    shape = [int(rng.integers(1, max_pts + 1)) for _ in range(dims)]
    lo = [-int(rng.integers(0, n)) for n in shape]
    st = step if step is not None else [Fraction(1, int(rng.integers(1, 4))) for _ in range(dims)]
    g = LatticeGrid((Fraction(0),) * dims, st, tuple(lo), tuple(l + n - 1 for l, n in zip(lo, shape)))
    vals = rng.integers(-20, 21, size=g.size) / 4.0
    if inf_rate:
        vals[rng.random(g.size) < inf_rate] = np.inf
        if not np.isfinite(vals).any():
            vals[int(rng.integers(0, g.size))] = 0.0
    return GridFn(g, vals.reshape(g.shape))


def constrained_infconv_exact(k: GridFn, C: RatLinMap, D: RatLinMap, dw: int,
                              x_grid: LatticeGrid, u_grid: LatticeGrid) -> dict:
    """``h(x, u) = min {k(C x, t) : D t = u}`` over grid ``t``; ``None`` for +inf."""
    tk = table(k)
    ts = list(points(k.grid.sub(range(dw, k.dim))))
    out = {}
    for x in points(x_grid):
        cx = tuple(C.apply(x))
        for u in points(u_grid):
            vals = [tk[cx + t] for t in ts if tuple(D.apply(t)) == tuple(u) and cx + t in tk]
            out[tuple(x) + tuple(u)] = min(vals) if vals else None
    return out
