"""Declarative verification scenarios.

A scenario is a TOML document::

    name = "example"

    [grids]
    X = { lower = [-2], upper = [2], step = "1/2" }

    [maps]
    A = [[1]]

    [functions.f]
    grid = ["X", "X"]
    expr = { kind = "quadratic", Q = [[2, 0], [0, 2]] }

    [reprs.h]
    kind = "normal_cone"
    K = [[-1], [1]]
    ystar = [0]
    e_grid = "X"
    es_grid = "X"

    [[checks]]
    type = "coupled_duality"
    f = "f"
    ...

Rationals may be written as integers, decimal literals or strings such as
``"1/3"``; decimal literals are read as the decimal they spell.
:func:`load_scenario` parses and validates a file; every problem is
reported as a :class:`ScenarioError` naming the offending entity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .corpus import auto_setup, cc_instances
from .monops import CcInstance, OperatorGraph
from .numcore import GridFn, ImproperError, LatticeGrid, Polytope, RatLinMap
from .quadab import ConstrainedSetup, QuadSetup, lift_to_constrained

__all__ = ["ScenarioError", "CheckSpec", "Scenario", "CHECK_TYPES", "load_scenario",
           "parse_scenario", "EXPRESSION_KINDS", "REPR_KINDS"]

Value = Fraction | float  # float only for +inf
Expr = Callable[[tuple[Fraction, ...]], Value]

EXPRESSION_KINDS = ("quadratic", "abs", "indicator_box", "indicator_polytope", "support",
                    "max_affine", "pairing", "sum", "scale")
REPR_KINDS = ("normal_cone", "inverse_normal", "separable", "sampled", "at")

_COUPLED_KEYS = {"f", "g", "A", "B", "duals", "window", "margin", "y_step"}
_COMMON_KEYS = {"type", "name", "tol"}
CHECK_KEYS: dict[str, set[str]] = {
    "coupled_duality": _COUPLED_KEYS | {"expect_max_gap"},
    "constrained_duality": _COUPLED_KEYS | {"expect_max_gap", "k", "C", "D", "dw", "x_grid",
                                            "u_grid", "w_dual", "t_dual"},
    "cross_path": _COUPLED_KEYS,
    "qualification": _COUPLED_KEYS | {"generators", "expect"},
    "representativity": {"repr", "strong", "expect_strong"},
    "graph_invariance": {"repr"},
    "cc_maximality": {"repr", "pairs", "e_grid", "es_grid", "extent", "instances"},
    "strong_maximality": {"repr", "extent", "instances", "check_composite"},
    "composite": {"f", "g", "M", "variant", "expect"},
    "br_property": {"repr", "alphas", "betas", "points", "stride"},
    "shear_sets": {"G", "R", "box", "random", "max_dim"},
    "random_weak_duality": {"count", "inf_rate"},
}
CHECK_TYPES = tuple(CHECK_KEYS)


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario input."""


# ---------------------------------------------------------------- scalars


def _rat(v, where: str) -> Fraction:
    if isinstance(v, bool):
        raise ScenarioError(f"{where}: expected a rational, got {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ScenarioError(f"{where}: non-finite number {v!r}")
        return Fraction(repr(v))
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise ScenarioError(f"{where}: cannot read {v!r} as a rational") from None
    raise ScenarioError(f"{where}: expected a rational, got {v!r}")


def _vec(v, where: str, dim: int | None = None) -> tuple[Fraction, ...]:
    if not isinstance(v, list) or not v:
        raise ScenarioError(f"{where}: expected a nonempty list of rationals")
    out = tuple(_rat(x, f"{where}[{i}]") for i, x in enumerate(v))
    if dim is not None and len(out) != dim:
        raise ScenarioError(f"{where}: expected {dim} entries, got {len(out)}")
    return out


def _matrix(v, where: str, shape: tuple[int | None, int | None] = (None, None)):
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise ScenarioError(f"{where}: expected a nonempty list of rows")
    rows = [_vec(r, f"{where}[{i}]") for i, r in enumerate(v)]
    if len({len(r) for r in rows}) != 1:
        raise ScenarioError(f"{where}: rows have different lengths")
    if shape[0] is not None and len(rows) != shape[0]:
        raise ScenarioError(f"{where}: expected {shape[0]} rows, got {len(rows)}")
    if shape[1] is not None and len(rows[0]) != shape[1]:
        raise ScenarioError(f"{where}: expected {shape[1]} columns, got {len(rows[0])}")
    return rows


def _polytope(v, where: str, dim: int | None = None) -> Polytope:
    return Polytope(tuple(_matrix(v, where, (None, dim))))


def _int(v, where: str, lo: int = 0) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ScenarioError(f"{where}: expected an integer >= {lo}, got {v!r}")
    return v


def _str(v, where: str) -> str:
    if not isinstance(v, str):
        raise ScenarioError(f"{where}: expected a name, got {v!r}")
    return v


# ---------------------------------------------------------------- expressions


def _dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _axes(spec: dict, dim: int, where: str) -> list[int]:
    axes = spec.get("axes", list(range(dim)))
    if (not isinstance(axes, list) or not axes or len(set(axes)) != len(axes)
            or any(isinstance(a, bool) or not isinstance(a, int) or not 0 <= a < dim for a in axes)):
        raise ScenarioError(f"{where}: axes must be distinct indices below {dim}, got {axes!r}")
    return axes


def _leaf(kind: str, spec: dict, k: int, where: str) -> Expr:
    """Evaluator on the ``k`` selected coordinates."""
    allowed = {"kind", "axes"}
    if kind == "quadratic":
        # x^T Q x / 2 + b.x + c
        allowed |= {"Q", "b", "c"}
        Q = _matrix(spec["Q"], f"{where}.Q", (k, k)) if "Q" in spec else [[Fraction(0)] * k] * k
        b = _vec(spec["b"], f"{where}.b", k) if "b" in spec else (Fraction(0),) * k
        c = _rat(spec.get("c", 0), f"{where}.c")
        fn = lambda x: _dot(x, [_dot(r, x) for r in Q]) / 2 + _dot(b, x) + c  # noqa: E731
    elif kind == "abs":
        allowed |= {"scale", "center"}
        s = _rat(spec.get("scale", 1), f"{where}.scale")
        ctr = _vec(spec["center"], f"{where}.center", k) if "center" in spec else (Fraction(0),) * k
        fn = lambda x: s * sum((abs(a - b) for a, b in zip(x, ctr)), Fraction(0))  # noqa: E731
    elif kind == "indicator_box":
        allowed |= {"lower", "upper"}
        lo, hi = _vec(spec.get("lower"), f"{where}.lower", k), _vec(spec.get("upper"), f"{where}.upper", k)
        fn = lambda x: Fraction(0) if all(a <= v <= b for a, v, b in zip(lo, x, hi)) else math.inf  # noqa: E731
    elif kind == "indicator_polytope":
        allowed |= {"vertices"}
        P = _polytope(spec.get("vertices"), f"{where}.vertices", k)
        fn = lambda x: Fraction(0) if P.contains(x) else math.inf  # noqa: E731
    elif kind == "support":
        allowed |= {"vertices"}
        P = _polytope(spec.get("vertices"), f"{where}.vertices", k)
        fn = P.support
    elif kind == "max_affine":
        allowed |= {"slopes", "intercepts"}
        S = _matrix(spec.get("slopes"), f"{where}.slopes", (None, k))
        c = _vec(spec["intercepts"], f"{where}.intercepts", len(S)) if "intercepts" in spec \
            else (Fraction(0),) * len(S)
        fn = lambda x: max(_dot(r, x) + ci for r, ci in zip(S, c))  # noqa: E731
    elif kind == "pairing":
        if k % 2:
            raise ScenarioError(f"{where}: pairing needs an even number of axes")
        h = k // 2
        fn = lambda x: _dot(x[:h], x[h:])  # noqa: E731
    else:
        raise ScenarioError(f"{where}: unknown expression kind {kind!r}")
    extra = set(spec) - allowed
    if extra:
        raise ScenarioError(f"{where}: unexpected keys {sorted(extra)} for {kind}")
    return fn


def compile_expr(spec, dim: int, where: str) -> Expr:
    """Exact evaluator of an expression over a ``dim``-dimensional grid."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ScenarioError(f"{where}: an expression is a table with a 'kind'")
    kind = spec["kind"]
    if kind == "sum":
        if set(spec) - {"kind", "terms"}:
            raise ScenarioError(f"{where}: sum takes only 'terms'")
        terms = spec.get("terms")
        if not isinstance(terms, list) or not terms:
            raise ScenarioError(f"{where}.terms: expected a nonempty list")
        parts = [compile_expr(t, dim, f"{where}.terms[{i}]") for i, t in enumerate(terms)]

        def total(x):
            vals = [p(x) for p in parts]
            return math.inf if any(v == math.inf for v in vals) else sum(vals, Fraction(0))
        return total
    if kind == "scale":
        if set(spec) - {"kind", "factor", "term"}:
            raise ScenarioError(f"{where}: scale takes 'factor' and 'term'")
        c = _rat(spec.get("factor"), f"{where}.factor")
        if c <= 0:
            raise ScenarioError(f"{where}.factor: must be positive")
        inner = compile_expr(spec.get("term"), dim, f"{where}.term")
        return lambda x: (lambda v: v if v == math.inf else c * v)(inner(x))
    axes = _axes(spec, dim, where)
    fn = _leaf(kind, spec, len(axes), where)
    return lambda x: fn(tuple(x[i] for i in axes))


# ---------------------------------------------------------------- model


@dataclass(frozen=True)
class CheckSpec:
    """A declared check; ``data`` holds the objects built during validation."""

    index: int
    name: str
    type: str
    params: dict
    data: dict = field(default_factory=dict)


@dataclass
class Scenario:
    name: str
    description: str
    grids: dict[str, LatticeGrid]
    maps: dict[str, RatLinMap]
    functions: dict[str, GridFn]
    reprs: dict[str, Any]
    checks: list[CheckSpec]
    source: str = ""


class _Builder:
    def __init__(self, doc: dict, source: str, max_cells: int):
        self.doc, self.source, self.max_cells = doc, source, max_cells
        self.grids: dict[str, LatticeGrid] = {}
        self.maps: dict[str, RatLinMap] = {}
        self.functions: dict[str, GridFn] = {}
        self.reprs: dict[str, Any] = {}

    # lookups
    def _get(self, table: dict, kind: str, name, where: str):
        name = _str(name, where)
        if name not in table:
            raise ScenarioError(f"{where}: undefined {kind} {name!r}")
        return table[name]

    def grid(self, name, where):
        if isinstance(name, list):
            if not name:
                raise ScenarioError(f"{where}: empty grid product")
            gs = [self._get(self.grids, "grid", n, where) for n in name]
            return gs[0].product(*gs[1:]) if len(gs) > 1 else gs[0]
        return self._get(self.grids, "grid", name, where)

    def map(self, name, where):
        return self._get(self.maps, "map", name, where)

    def function(self, name, where):
        return self._get(self.functions, "function", name, where)

    def repr(self, name, where):
        return self._get(self.reprs, "representative", name, where)

    # sections
    def build(self) -> Scenario:
        doc = self.doc
        known = {"name", "description", "grids", "maps", "functions", "reprs", "checks"}
        extra = set(doc) - known
        if extra:
            raise ScenarioError(f"unexpected top-level keys {sorted(extra)}")
        name = doc.get("name", Path(self.source).stem if self.source else "scenario")
        if not isinstance(name, str) or not name:
            raise ScenarioError("name: expected a nonempty string")
        for gname, spec in self._table("grids").items():
            self.grids[gname] = self._grid(gname, spec)
        for mname, spec in self._table("maps").items():
            self.maps[mname] = RatLinMap(tuple(tuple(r) for r in _matrix(spec, f"map {mname!r}")))
        for fname, spec in self._table("functions").items():
            self.functions[fname] = self._function(fname, spec)
        for rname, spec in self._table("reprs").items():
            self.reprs[rname] = self._repr(rname, spec)
        raw = doc.get("checks", [])
        if not isinstance(raw, list) or not raw:
            raise ScenarioError("checks: a scenario declares at least one [[checks]] entry")
        checks = [self._check(i, spec) for i, spec in enumerate(raw)]
        names = [c.name for c in checks]
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            raise ScenarioError(f"duplicate check names {dup}")
        return Scenario(name, str(doc.get("description", "")), self.grids, self.maps,
                        self.functions, self.reprs, checks, self.source)

    def _table(self, key: str) -> dict:
        t = self.doc.get(key, {})
        if not isinstance(t, dict):
            raise ScenarioError(f"{key}: expected a table")
        for k, v in t.items():
            if not isinstance(v, (dict, list)):
                raise ScenarioError(f"{key}.{k}: expected a table")
        return t

    def _grid(self, name: str, spec) -> LatticeGrid:
        where = f"grid {name!r}"
        if not isinstance(spec, dict) or set(spec) - {"lower", "upper", "step"}:
            raise ScenarioError(f"{where}: expected a table with lower, upper and optional step")
        lo, hi = _vec(spec.get("lower"), f"{where}.lower"), _vec(spec.get("upper"), f"{where}.upper")
        if len(lo) != len(hi):
            raise ScenarioError(f"{where}: lower and upper differ in length")
        st = spec.get("step", 1)
        step = _vec(st, f"{where}.step") if isinstance(st, list) else (_rat(st, f"{where}.step"),)
        if len(step) not in (1, len(lo)):
            raise ScenarioError(f"{where}.step: expected 1 or {len(lo)} entries")
        try:
            return LatticeGrid.from_bounds(lo, hi, step)
        except ValueError as e:
            raise ScenarioError(f"{where}: {e}") from None

    def _function(self, name: str, spec) -> GridFn:
        where = f"function {name!r}"
        if not isinstance(spec, dict) or set(spec) - {"grid", "expr"}:
            raise ScenarioError(f"{where}: expected a table with 'grid' and 'expr'")
        g = self.grid(spec.get("grid"), f"{where}.grid")
        if g.size > self.max_cells:
            raise ScenarioError(f"{where}: grid has {g.size} points, above the cap {self.max_cells}")
        fn = compile_expr(spec.get("expr"), g.dim, f"{where}.expr")
        try:
            return GridFn.from_exact(g, fn, name)
        except ImproperError as e:
            raise ScenarioError(f"{where}: {e}") from None

    def _repr(self, name: str, spec):
        from . import reprfn

        where = f"representative {name!r}"
        if not isinstance(spec, dict):
            raise ScenarioError(f"{where}: expected a table")
        kind = spec.get("kind")
        keys = {"normal_cone": {"K", "ystar", "e_grid", "es_grid"},
                "inverse_normal": {"y", "K", "e_grid", "es_grid"},
                "separable": {"phi", "es_grid"},
                "sampled": {"function", "n"},
                "at": {"source"}}
        if kind not in keys:
            raise ScenarioError(f"{where}: kind must be one of {list(keys)}")
        extra = set(spec) - keys[kind] - {"kind"}
        if extra:
            raise ScenarioError(f"{where}: unexpected keys {sorted(extra)}")
        try:
            if kind in ("normal_cone", "inverse_normal"):
                E = self.grid(spec.get("e_grid"), f"{where}.e_grid")
                Es = self.grid(spec.get("es_grid"), f"{where}.es_grid")
                K = _polytope(spec.get("K"), f"{where}.K", E.dim)
                if kind == "normal_cone":
                    r = reprfn.normal_cone_repr(K, _vec(spec.get("ystar"), f"{where}.ystar", E.dim), E, Es)
                else:
                    r = reprfn.inverse_normal_repr(_vec(spec.get("y"), f"{where}.y", E.dim), K, E, Es)
            elif kind == "separable":
                phi = self.function(spec.get("phi"), f"{where}.phi")
                r = reprfn.separable_repr(phi, self.grid(spec.get("es_grid"), f"{where}.es_grid"))
            elif kind == "sampled":
                vals = self.function(spec.get("function"), f"{where}.function")
                n = _int(spec.get("n", vals.dim // 2), f"{where}.n", 1)
                r = reprfn.SampledRepr(vals, n, name)
            else:
                src = self.repr(spec.get("source"), f"{where}.source")
                r = reprfn.AtRepr(src)
        except ScenarioError:
            raise
        except ValueError as e:
            raise ScenarioError(f"{where}: {e}") from None
        r.label = name
        return r

    # checks
    def _check(self, i: int, spec) -> CheckSpec:
        if not isinstance(spec, dict):
            raise ScenarioError(f"checks[{i}]: expected a table")
        ctype = spec.get("type")
        if ctype not in CHECK_KEYS:
            raise ScenarioError(f"checks[{i}]: type must be one of {list(CHECK_TYPES)}, got {ctype!r}")
        name = spec.get("name", f"{ctype}_{i}")
        where = f"check {name!r}"
        if not isinstance(name, str) or not name:
            raise ScenarioError(f"checks[{i}].name: expected a nonempty string")
        extra = set(spec) - CHECK_KEYS[ctype] - _COMMON_KEYS
        if extra:
            raise ScenarioError(f"{where}: unexpected keys {sorted(extra)} for {ctype}")
        if "tol" in spec:
            t = _rat(spec["tol"], f"{where}.tol")
            if t < 0:
                raise ScenarioError(f"{where}.tol: must be nonnegative")
        data = getattr(self, "_prep_" + ctype)(spec, where)
        return CheckSpec(i, name, ctype, dict(spec), data)

    def _coupled(self, p: dict, where: str) -> QuadSetup:
        for key in ("f", "g", "A", "B"):
            if key not in p:
                raise ScenarioError(f"{where}: missing '{key}'")
        f, g = self.function(p["f"], f"{where}.f"), self.function(p["g"], f"{where}.g")
        A, B = self.map(p["A"], f"{where}.A"), self.map(p["B"], f"{where}.B")
        dx, dy = A.cols, A.rows
        if not 0 < dx < f.dim:
            raise ScenarioError(f"{where}: map {p['A']!r} is {A.rows}x{A.cols}; its column count must "
                                f"leave a nonempty U block of the {f.dim}-dimensional {p['f']!r}")
        if not 0 < dy < g.dim:
            raise ScenarioError(f"{where}: map {p['A']!r} is {A.rows}x{A.cols}; its row count must "
                                f"leave a nonempty V block of the {g.dim}-dimensional {p['g']!r}")
        du, dv = f.dim - dx, g.dim - dy
        if (B.rows, B.cols) != (du, dv):
            raise ScenarioError(f"{where}: map {p['B']!r} is {B.rows}x{B.cols}, expected {du}x{dv}")
        try:
            if "duals" in p:
                d = p["duals"]
                if not isinstance(d, list) or len(d) != 4:
                    raise ScenarioError(f"{where}.duals: expected four grid names (X*, U*, Y*, V*)")
                grids = [self.grid(n, f"{where}.duals") for n in d]
                win = self.grid(p["window"], f"{where}.window") if "window" in p else None
                return QuadSetup(f, g, A, B, dx, dy, *grids, name=where, window=win)
            if "window" in p:
                raise ScenarioError(f"{where}: 'window' requires explicit 'duals'")
            margin = _int(p.get("margin", 0), f"{where}.margin")
            y_step = _rat(p.get("y_step", 1), f"{where}.y_step")
            return auto_setup(where, f, g, A, B, dx, dy, margin, y_step)
        except ScenarioError:
            raise
        except ValueError as e:  # includes grid incompatibility
            raise ScenarioError(f"{where}: {e}") from None

    def _prep_coupled_duality(self, p, where):
        out = {"setup": self._coupled(p, where)}
        if "expect_max_gap" in p:
            out["expect_max_gap"] = _rat(p["expect_max_gap"], f"{where}.expect_max_gap")
        return out

    def _prep_constrained_duality(self, p, where):
        out = {}
        if "expect_max_gap" in p:
            out["expect_max_gap"] = _rat(p["expect_max_gap"], f"{where}.expect_max_gap")
        if "k" not in p:
            out["setup"] = lift_to_constrained(self._coupled(p, where), self.max_cells)
            return out
        bad = {"f", "g", "A", "B", "margin", "y_step"} & set(p)
        if bad:
            raise ScenarioError(f"{where}: explicit 'k' excludes {sorted(bad)}")
        k = self.function(p["k"], f"{where}.k")
        C, D = self.map(p.get("C"), f"{where}.C"), self.map(p.get("D"), f"{where}.D")
        dw = _int(p.get("dw", C.rows), f"{where}.dw", 1)
        try:
            X = self.grid(p.get("x_grid"), f"{where}.x_grid")
            U = self.grid(p.get("u_grid"), f"{where}.u_grid")
            d = p.get("duals")
            if not isinstance(d, list) or len(d) != 2:
                raise ScenarioError(f"{where}.duals: expected two grid names (X*, U*)")
            xs, us = (self.grid(n, f"{where}.duals") for n in d)
            ws = self.grid(p.get("w_dual"), f"{where}.w_dual")
            ts = self.grid(p.get("t_dual"), f"{where}.t_dual")
            win = self.grid(p["window"], f"{where}.window") if "window" in p else None
            out["setup"] = ConstrainedSetup(k, C, D, dw, X, U, xs, us, ws, ts, name=where, window=win)
        except ScenarioError:
            raise
        except ValueError as e:
            raise ScenarioError(f"{where}: {e}") from None
        return out

    def _prep_cross_path(self, p, where):
        return {"setup": self._coupled(p, where)}

    def _prep_qualification(self, p, where):
        expect = p.get("expect", True)
        if not isinstance(expect, bool):
            raise ScenarioError(f"{where}.expect: expected true or false")
        if "generators" in p:
            if set(p) & _COUPLED_KEYS:
                raise ScenarioError(f"{where}: give either 'generators' or a coupled setup")
            return {"generators": _matrix(p["generators"], f"{where}.generators"), "expect": expect}
        return {"setup": self._coupled(p, where), "expect": expect}

    def _need_repr(self, p, where):
        if "repr" not in p:
            raise ScenarioError(f"{where}: missing 'repr'")
        return self.repr(p["repr"], f"{where}.repr")

    def _prep_representativity(self, p, where):
        strong = p.get("strong", True)
        expect = p.get("expect_strong", True)
        if not isinstance(strong, bool) or not isinstance(expect, bool):
            raise ScenarioError(f"{where}: 'strong' and 'expect_strong' are booleans")
        return {"repr": self._need_repr(p, where), "strong": strong, "expect_strong": expect}

    def _prep_graph_invariance(self, p, where):
        return {"repr": self._need_repr(p, where)}

    def _extent(self, p, where):
        if "extent" not in p:
            return None
        e = p["extent"]
        if not isinstance(e, list) or len(e) != 2:
            raise ScenarioError(f"{where}.extent: expected two grid names (E, E*)")
        return (self.grid(e[0], f"{where}.extent"), self.grid(e[1], f"{where}.extent"))

    def _instances(self, p, dim: int, where: str) -> list[CcInstance]:
        raw = p.get("instances", "standard")
        if raw == "standard":
            if dim > 2:
                raise ScenarioError(f"{where}: standard instances exist for dimensions 1 and 2")
            return cc_instances(dim)
        if not isinstance(raw, list) or not raw:
            raise ScenarioError(f"{where}.instances: expected \"standard\" or a list of tables")
        out = []
        for i, s in enumerate(raw):
            w = f"{where}.instances[{i}]"
            if not isinstance(s, dict) or set(s) != {"kind", "point", "C"}:
                raise ScenarioError(f"{w}: expected a table with kind, point and C")
            if s["kind"] not in ("star", "space"):
                raise ScenarioError(f"{w}.kind: must be 'star' or 'space'")
            out.append(CcInstance(s["kind"], _vec(s["point"], f"{w}.point", dim),
                                  _polytope(s["C"], f"{w}.C", dim)))
        return out

    def _prep_cc_maximality(self, p, where):
        if ("repr" in p) == ("pairs" in p):
            raise ScenarioError(f"{where}: give exactly one of 'repr' and 'pairs'")
        if "repr" in p:
            r = self.repr(p["repr"], f"{where}.repr")
            E = self.grid(p["e_grid"], f"{where}.e_grid") if "e_grid" in p else r.e_grid
            Es = self.grid(p["es_grid"], f"{where}.es_grid") if "es_grid" in p else r.es_grid
            graph = None
        else:
            if "e_grid" not in p or "es_grid" not in p:
                raise ScenarioError(f"{where}: explicit pairs need 'e_grid' and 'es_grid'")
            r = None
            E, Es = self.grid(p["e_grid"], f"{where}.e_grid"), self.grid(p["es_grid"], f"{where}.es_grid")
            raw = p["pairs"]
            if not isinstance(raw, list) or not raw:
                raise ScenarioError(f"{where}.pairs: expected a nonempty list of [x, x*] pairs")
            pairs = []
            for i, pr in enumerate(raw):
                if not isinstance(pr, list) or len(pr) != 2:
                    raise ScenarioError(f"{where}.pairs[{i}]: expected [x, x*]")
                pairs.append((_vec(pr[0], f"{where}.pairs[{i}]", E.dim),
                              _vec(pr[1], f"{where}.pairs[{i}]", Es.dim)))
            graph = OperatorGraph.from_pairs(pairs)
        if E.dim != Es.dim:
            raise ScenarioError(f"{where}: E and E* grids differ in dimension")
        return {"repr": r, "graph": graph, "e_grid": E, "es_grid": Es,
                "extent": self._extent(p, where), "instances": self._instances(p, E.dim, where)}

    def _prep_strong_maximality(self, p, where):
        r = self._need_repr(p, where)
        cc = p.get("check_composite", False)
        if not isinstance(cc, bool):
            raise ScenarioError(f"{where}.check_composite: expected true or false")
        return {"repr": r, "extent": self._extent(p, where),
                "instances": self._instances(p, r.n, where), "check_composite": cc}

    def _prep_composite(self, p, where):
        f, g = self.repr(p.get("f"), f"{where}.f"), self.repr(p.get("g"), f"{where}.g")
        M = self.map(p.get("M"), f"{where}.M")
        variant = p.get("variant", "a")
        if variant not in ("a", "b", "c"):
            raise ScenarioError(f"{where}.variant: must be 'a', 'b' or 'c'")
        rows, cols = (g.n, f.n)
        if (M.rows, M.cols) != (rows, cols):
            raise ScenarioError(f"{where}: map {p['M']!r} is {M.rows}x{M.cols}, expected {rows}x{cols}")
        expect = p.get("expect", "verified")
        if expect not in ("verified", "inapplicable"):
            raise ScenarioError(f"{where}.expect: must be 'verified' or 'inapplicable'")
        return {"f": f, "g": g, "M": M, "variant": variant, "expect": expect}

    def _prep_br_property(self, p, where):
        r = self._need_repr(p, where)
        alphas = [_rat(a, f"{where}.alphas") for a in p.get("alphas", ["1/4", "1/2", 1])]
        betas = [_rat(b, f"{where}.betas") for b in p.get("betas", ["1/4", "1/2", 1])]
        if not alphas or not betas or any(v <= 0 for v in alphas + betas):
            raise ScenarioError(f"{where}: alphas and betas must be positive")
        if "points" in p:
            pts = [_vec(q, f"{where}.points[{i}]", 2 * r.n) for i, q in enumerate(p["points"])]
        else:
            stride = _int(p.get("stride", 1), f"{where}.stride", 1)
            pts = [q for j, q in enumerate(r.grid.exact_points()) if j % stride == 0]
        return {"repr": r, "alphas": alphas, "betas": betas, "points": pts}

    def _prep_shear_sets(self, p, where):
        if "random" in p:
            if {"G", "R", "box"} & set(p):
                raise ScenarioError(f"{where}: 'random' excludes explicit G, R and box")
            md = _int(p.get("max_dim", 3), f"{where}.max_dim", 2)
            return {"random": _int(p["random"], f"{where}.random", 1), "max_dim": md}
        R = self.map(p.get("R"), f"{where}.R")
        box = self.grid(p.get("box"), f"{where}.box")
        if box.dim != R.rows + R.cols:
            raise ScenarioError(f"{where}: box has dimension {box.dim}, map {p['R']!r} needs "
                                f"{R.rows + R.cols}")
        G = _matrix(p.get("G"), f"{where}.G", (None, box.dim))
        return {"G": G, "R": R, "box": box}

    def _prep_random_weak_duality(self, p, where):
        rate = _rat(p.get("inf_rate", "1/4"), f"{where}.inf_rate")
        if not 0 <= rate < 1:
            raise ScenarioError(f"{where}.inf_rate: must lie in [0, 1)")
        return {"count": _int(p.get("count", 20), f"{where}.count", 1), "inf_rate": float(rate)}


def parse_scenario(doc: dict, source: str = "", max_cells: int = 1 << 22) -> Scenario:
    """Validate a parsed TOML document and build every referenced object."""
    return _Builder(doc, source, max_cells).build()


def load_scenario(path, max_cells: int = 1 << 22) -> Scenario:
    """Read and validate a scenario file.

    Raises
    ------
    ScenarioError
        On unreadable files, TOML syntax errors (the message carries the
        line and column) and validation failures.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e.strerror}") from None
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as e:
        raise ScenarioError(f"{path}: not UTF-8 text ({e.reason})") from None
    except tomllib.TOMLDecodeError as e:
        raise ScenarioError(f"{path}: parse error: {e}") from None
    return parse_scenario(doc, str(path), max_cells)
