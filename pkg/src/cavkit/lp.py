"""Exact simplex routines for small dense problems.

:func:`phase_one` decides ``{x >= 0 : A x = b}`` over the rationals with
Bland's rule, so the answer never depends on a tolerance.  When the system
is infeasible a Farkas vector ``y`` is returned with ``A^T y <= 0`` and
``b . y > 0``.  :func:`minimize` and :class:`EnvelopeSolver` add a cost row.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

__all__ = [
    "Feasibility",
    "LPResult",
    "EnvelopeSolver",
    "phase_one",
    "minimize",
    "in_convex_hull",
    "solve_exact",
]

MAX_ROWS = 64
MAX_COLS = 4096


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    x: tuple[Fraction, ...] | None
    farkas: tuple[Fraction, ...] | None


def _as_fraction_rows(A: Sequence[Sequence]) -> list[list[Fraction]]:
    return [[Fraction(v) for v in row] for row in A]


def phase_one(A: Sequence[Sequence], b: Sequence) -> Feasibility:
    """Decide feasibility of ``A x = b, x >= 0`` exactly.

    Parameters
    ----------
    A : m x n nested sequence of rationals (ints, Fractions or floats).
    b : length-m sequence of rationals.

    Returns
    -------
    Feasibility
        ``x`` is a basic feasible solution when feasible; otherwise
        ``farkas`` certifies infeasibility.
    """
    rows = _as_fraction_rows(A)
    rhs = [Fraction(v) for v in b]
    m = len(rows)
    n = len(rows[0]) if m else 0
    if m != len(rhs):
        raise ValueError("row count of A and length of b differ")
    if any(len(r) != n for r in rows):
        raise ValueError("ragged constraint matrix")
    if m > MAX_ROWS or n > MAX_COLS:
        raise ValueError(f"feasibility instance {m}x{n} exceeds the size cap")
    if m == 0:
        return Feasibility(True, tuple(Fraction(0) for _ in range(n)), None)

    sign = [1] * m
    for i in range(m):
        if rhs[i] < 0:
            sign[i] = -1
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]

    # Tableau columns: n structural, then m artificials.  Row i holds
    # [coefficients..., artificials..., rhs].
    width = n + m
    tab = [rows[i] + [Fraction(int(i == j)) for j in range(m)] + [rhs[i]] for i in range(m)]
    basis = [n + i for i in range(m)]
    cost = [Fraction(0)] * n + [Fraction(1)] * m

    def reduced_cost(j: int) -> Fraction:
        return cost[j] - sum((cost[basis[i]] * tab[i][j] for i in range(m)), Fraction(0))

    while True:
        entering = None
        for j in range(width):
            if j in basis:
                continue
            if reduced_cost(j) < 0:
                entering = j
                break
        if entering is None:
            break
        best = None
        for i in range(m):
            a = tab[i][entering]
            if a > 0:
                ratio = tab[i][-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:  # cannot happen: phase one is bounded below by 0
            raise RuntimeError("unbounded phase-one problem")
        r = best[1]
        piv = tab[r][entering]
        tab[r] = [v / piv for v in tab[r]]
        for i in range(m):
            if i != r and tab[i][entering] != 0:
                factor = tab[i][entering]
                tab[i] = [vi - factor * vr for vi, vr in zip(tab[i], tab[r])]
        basis[r] = entering

    objective = sum((cost[basis[i]] * tab[i][-1] for i in range(m)), Fraction(0))
    if objective == 0:
        x = [Fraction(0)] * n
        for i in range(m):
            if basis[i] < n:
                x[basis[i]] = tab[i][-1]
        return Feasibility(True, tuple(x), None)

    # Dual of the phase-one LP: y^T = c_B^T B^{-1}; B^{-1} sits in the
    # artificial columns of the final tableau.
    y = []
    for k in range(m):
        yk = sum((cost[basis[i]] * tab[i][n + k] for i in range(m)), Fraction(0))
        y.append(yk * sign[k])
    return Feasibility(False, None, tuple(y))


def in_convex_hull(point: Sequence, vertices: Sequence[Sequence]) -> bool:
    """Exact test ``point in conv(vertices)``."""
    p = [Fraction(v) for v in point]
    verts = [[Fraction(v) for v in vert] for vert in vertices]
    if not verts:
        return False
    d = len(p)
    for vert in verts:
        if vert == p:
            return True
    for i in range(d):
        lo = min(v[i] for v in verts)
        hi = max(v[i] for v in verts)
        if p[i] < lo or p[i] > hi:
            return False
    if d == 1:
        return True
    A = [[v[i] for v in verts] for i in range(d)] + [[Fraction(1)] * len(verts)]
    return phase_one(A, p + [Fraction(1)]).feasible


def solve_exact(A: Sequence[Sequence], b: Sequence) -> tuple[Fraction, ...] | None:
    """Unique solution of a square or overdetermined consistent system.

    Gaussian elimination over the rationals; returns ``None`` when the
    columns are dependent or the system is inconsistent.
    """
    rows = [[Fraction(v) for v in row] + [Fraction(bi)] for row, bi in zip(A, b)]
    m = len(rows)
    n = len(rows[0]) - 1 if m else 0
    r = 0
    pivots = []
    for c in range(n):
        p = next((i for i in range(r, m) if rows[i][c] != 0), None)
        if p is None:
            return None
        rows[r], rows[p] = rows[p], rows[r]
        pv = rows[r][c]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(m):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [vi - f * vr for vi, vr in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    if any(rows[i][-1] != 0 for i in range(r, m)):
        return None
    return tuple(rows[i][-1] for i in range(n))


@dataclass(frozen=True)
class LPResult:
    feasible: bool
    value: Fraction | None
    x: tuple[Fraction, ...] | None


def minimize(c: Sequence, A: Sequence[Sequence], b: Sequence) -> LPResult:
    """Exact ``min c.x`` subject to ``A x = b, x >= 0``.

    Two-phase tableau simplex with Bland's rule.  The caller must ensure the
    problem is bounded (true for convex-combination problems, where a row of
    ones caps every variable).
    """
    rows = _as_fraction_rows(A)
    rhs = [Fraction(v) for v in b]
    cost = [Fraction(v) for v in c]
    m = len(rows)
    n = len(cost)
    if m == 0 or any(len(r) != n for r in rows) or len(rhs) != m:
        raise ValueError("inconsistent LP dimensions")
    if m > MAX_ROWS or n > MAX_COLS:
        raise ValueError(f"LP instance {m}x{n} exceeds the size cap")
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]

    width = n + m
    tab = [rows[i] + [Fraction(int(i == j)) for j in range(m)] + [rhs[i]] for i in range(m)]
    basis = [n + i for i in range(m)]

    def run(obj: list[Fraction], allowed: int) -> None:
        while True:
            # reduced costs for the current basis
            cb = [obj[basis[i]] for i in range(m)]
            entering = None
            in_basis = set(basis)
            for j in range(allowed):
                if j in in_basis:
                    continue
                rc = obj[j]
                for i in range(m):
                    if cb[i] and tab[i][j]:
                        rc -= cb[i] * tab[i][j]
                if rc < 0:
                    entering = j
                    break
            if entering is None:
                return
            best = None
            for i in range(m):
                a = tab[i][entering]
                if a > 0:
                    key = (tab[i][-1] / a, basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                raise RuntimeError("unbounded LP")
            r = best[1]
            piv = tab[r][entering]
            if piv != 1:
                tab[r] = [v / piv for v in tab[r]]
            pr = tab[r]
            for i in range(m):
                f = tab[i][entering]
                if i != r and f:
                    tab[i] = [vi - f * vr for vi, vr in zip(tab[i], pr)]
            basis[r] = entering

    phase1 = [Fraction(0)] * n + [Fraction(1)] * m
    run(phase1, width)
    if sum((tab[i][-1] for i in range(m) if basis[i] >= n), Fraction(0)) != 0:
        return LPResult(False, None, None)
    # Drive zero-level artificials out of the basis where possible.
    for i in range(m):
        if basis[i] >= n:
            j = next((j for j in range(n) if tab[i][j] != 0 and j not in basis), None)
            if j is not None:
                piv = tab[i][j]
                tab[i] = [v / piv for v in tab[i]]
                for k in range(m):
                    f = tab[k][j]
                    if k != i and f:
                        tab[k] = [vk - f * vi for vk, vi in zip(tab[k], tab[i])]
                basis[i] = j
    # Redundant rows keep an artificial at zero; bar it from re-entering.
    obj = cost + [Fraction(0)] * m
    run(obj, n)
    x = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tab[i][-1]
    value = sum((cost[j] * x[j] for j in range(n)), Fraction(0))
    return LPResult(True, value, tuple(x))


class EnvelopeSolver:
    """Repeated exact solves of ``min c.x : A x = b, x >= 0`` for varying ``b``.

    Revised simplex over the rationals with integer data.  The optimal basis
    of one solve warm-starts the next, which makes sweeping ``b`` over
    neighbouring grid points cheap.  Pricing uses Dantzig's rule and falls
    back to Bland's rule after a run of degenerate pivots, so every solve
    terminates.  Problems must be bounded.
    """

    def __init__(self, columns: Sequence[Sequence[int]], costs: Sequence[int]):
        self.cols = [tuple(int(v) for v in c) for c in columns]
        self.costs = [int(v) for v in costs]
        if not self.cols:
            raise ValueError("no columns")
        self.m = len(self.cols[0])
        self.n = len(self.cols)
        if self.m > MAX_ROWS:
            raise ValueError("too many rows")
        self._basis: list[int] | None = None
        self._sign = [1] * self.m

    def _column(self, j: int) -> tuple:
        if j < self.n:
            return self.cols[j]
        i = j - self.n
        return tuple(self._sign[i] if r == i else 0 for r in range(self.m))

    def _invert(self, basis: list[int]) -> list[list[Fraction]] | None:
        m = self.m
        cols = [self._column(j) for j in basis]
        M = [[Fraction(cols[c][r]) for c in range(m)] + [Fraction(int(r == k)) for k in range(m)]
             for r in range(m)]
        for c in range(m):
            p = next((r for r in range(c, m) if M[r][c] != 0), None)
            if p is None:
                return None
            M[c], M[p] = M[p], M[c]
            pv = M[c][c]
            M[c] = [v / pv for v in M[c]]
            for r in range(m):
                if r != c and M[r][c] != 0:
                    f = M[r][c]
                    M[r] = [a - f * b for a, b in zip(M[r], M[c])]
        return [row[m:] for row in M]

    def solve(self, b: Sequence[int]) -> Fraction | None:
        """Optimal value, or None when infeasible."""
        m, n = self.m, self.n
        b = [Fraction(v) for v in b]
        basis = self._basis
        Binv = self._invert(basis) if basis is not None else None
        if Binv is not None:
            xB = [sum((Binv[r][k] * b[k] for k in range(m)), Fraction(0)) for r in range(m)]
            if any(v < 0 for v in xB) or any(
                j >= n and xB[r] != 0 for r, j in enumerate(basis)
            ):
                Binv = None
        if Binv is None:
            self._sign = [1 if v >= 0 else -1 for v in b]
            basis = [n + i for i in range(m)]
            Binv = [[Fraction(self._sign[r]) if r == k else Fraction(0) for k in range(m)]
                    for r in range(m)]
            xB = [abs(v) for v in b]
            phase1 = [0] * n + [1] * m
            basis, Binv, xB = self._run(basis, Binv, xB, phase1, n + m)
            if any(j >= n and xB[r] != 0 for r, j in enumerate(basis)):
                return None
        basis, Binv, xB = self._run(basis, Binv, xB, self.costs + [0] * m, n)
        self._basis = basis
        return sum((self.costs[j] * xB[r] for r, j in enumerate(basis) if j < n), Fraction(0))

    def _run(self, basis, Binv, xB, cost, allowed):
        m = self.m
        degenerate = 0
        while True:
            cB = [cost[j] for j in basis]
            y = [sum((cB[r] * Binv[r][k] for r in range(m)), Fraction(0)) for k in range(m)]
            den = 1
            for v in y:
                den = den * v.denominator // math.gcd(den, v.denominator)
            Y = [int(v * den) for v in y]
            in_basis = set(basis)
            entering = None
            best = 0
            bland = degenerate > 2 * m + 8
            for j in range(allowed):
                if j in in_basis:
                    continue
                col = self._column(j)
                rc = cost[j] * den - sum(a * c for a, c in zip(Y, col))
                if rc < 0:
                    if bland:
                        entering = j
                        break
                    if entering is None or rc < best:
                        entering, best = j, rc
            if entering is None:
                return basis, Binv, xB
            col = self._column(entering)
            d = [sum((Binv[r][k] * col[k] for k in range(m) if col[k]), Fraction(0)) for r in range(m)]
            leave = None
            for r in range(m):
                if basis[r] >= self.n and xB[r] == 0 and d[r] != 0 and allowed <= self.n:
                    key = (Fraction(0), basis[r])
                elif d[r] > 0:
                    key = (xB[r] / d[r], basis[r])
                else:
                    continue
                if leave is None or key < leave[0]:
                    leave = (key, r)
            if leave is None:
                raise RuntimeError("unbounded LP")
            theta, r = leave[0][0], leave[1]
            degenerate = degenerate + 1 if theta == 0 else 0
            piv = d[r]
            xB = [xB[i] - theta * d[i] if i != r else theta for i in range(m)]
            row_r = [v / piv for v in Binv[r]]
            for i in range(m):
                if i != r and d[i] != 0:
                    Binv[i] = [a - d[i] * c for a, c in zip(Binv[i], row_r)]
            Binv[r] = row_r
            basis = basis[:r] + [entering] + basis[r + 1:]
