"""Execution of scenario checks.

Each runner turns a validated :class:`~cavkit.scenario.CheckSpec` into a
:class:`CheckResult`.  Verdicts are ``pass``, ``fail``, ``vacuous`` (the
hypotheses of the tested statement do not hold, so nothing is asserted
beyond what is reported) and ``error`` (an exception while running).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any

import numpy as np

from .numcore import ExtReal, LatticeGrid, RatLinMap
from .scenario import CheckSpec

__all__ = ["CheckResult", "RunOptions", "run_check", "VERDICTS"]

VERDICTS = ("pass", "fail", "vacuous", "error")


@dataclass(frozen=True)
class RunOptions:
    tol_scale: float = 1.0
    seed: int = 0
    max_cells: int = 1 << 22


@dataclass
class CheckResult:
    """Outcome of one check.

    ``gap`` and ``tolerance`` are floats (``inf`` allowed) or ``None`` when
    the check has no scalar measure; ``witness`` holds exact coordinates as
    strings.
    """

    name: str
    type: str
    verdict: str
    gap: float | None = None
    tolerance: float | None = None
    witness: Any = None
    details: dict = field(default_factory=dict)
    timing: float | None = None
    message: str = ""

    @property
    def failed(self) -> bool:
        return self.verdict in ("fail", "error")


def _s(v) -> Any:
    """Exact values as strings, nested containers preserved."""
    if isinstance(v, (tuple, list)):
        return [_s(x) for x in v]
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, ExtReal):
        return float(v)
    return v


def _tol(spec: CheckSpec, opts: RunOptions) -> float | None:
    t = spec.params.get("tol")
    if t is None:
        return None
    from .scenario import _rat
    return float(_rat(t, spec.name)) * opts.tol_scale


# ---------------------------------------------------------------- duality


def _duality(spec: CheckSpec, opts: RunOptions, rep) -> CheckResult:
    if spec.params.get("tol") is None:
        rep = replace(rep, tolerance=rep.tolerance * opts.tol_scale)
    gap = float(rep.max_gap)
    ok = rep.weak_ok and (rep.strong_ok or not rep.strong_applicable)
    expect = spec.data.get("expect_max_gap")
    if expect is not None and not gap <= float(expect):
        ok = False
    qc = rep.qualification
    details = {
        "weak_ok": rep.weak_ok,
        "weak_margin": rep.weak_margin,
        "strong_applicable": rep.strong_applicable,
        "strong_ok": rep.strong_ok,
        "hypotheses": {k: v for k, v in sorted(rep.hypotheses.items())},
        "compared_points": int(rep.lhs.grid.size),
        "qualification": qc.to_dict() if qc is not None else None,
        "certificates_verified": qc.verify() if qc is not None else None,
    }
    if expect is not None:
        details["expect_max_gap"] = str(expect)
    worst = rep.worst_point
    wit = rep.witness_point(worst)
    return CheckResult(spec.name, spec.type, "pass" if ok else "fail", gap, rep.tolerance,
                       {"dual_point": _s(worst), "dual_witness": _s(wit)}, details)


def _run_coupled_duality(spec, opts):
    from .quadab import verify_coupled_duality
    rep = verify_coupled_duality(spec.data["setup"], _tol(spec, opts), opts.max_cells)
    return _duality(spec, opts, rep)


def _run_constrained_duality(spec, opts):
    from .quadab import verify_constrained_duality
    rep = verify_constrained_duality(spec.data["setup"], _tol(spec, opts), opts.max_cells)
    return _duality(spec, opts, rep)


def _run_cross_path(spec, opts):
    from .quadab import cross_path_check
    r = cross_path_check(spec.data["setup"], opts.max_cells)
    wit = None
    if not r.ok:
        wit = {"primal_mismatch": _s(r.primal_mismatch), "dual_mismatch": _s(r.dual_mismatch)}
    return CheckResult(spec.name, spec.type, "pass" if r.ok else "fail", None, 0.0, wit,
                       {"primal_equal": r.primal_equal, "dual_equal": r.dual_equal})


def _run_qualification(spec, opts):
    from .qualif import check_qualification, cone_is_subspace
    if "generators" in spec.data:
        qc = cone_is_subspace(spec.data["generators"])
    else:
        qc = check_qualification(spec.data["setup"])
    verified = qc.verify()
    ok = verified and qc.is_subspace == spec.data["expect"]
    wit = None if qc.is_subspace else {"separator": _s(qc.separator),
                                        "failing_generator": _s(qc.generators[qc.failing])}
    details = dict(qc.to_dict(), certificates_verified=verified, expected=spec.data["expect"],
                   certificates=[_s(c) for c in qc.certificates])
    return CheckResult(spec.name, spec.type, "pass" if ok else "fail", None, None, wit, details)


# ---------------------------------------------------------------- representatives


def _run_representativity(spec, opts):
    from .reprfn import is_representative, is_strongly_representative
    f, tol = spec.data["repr"], _tol(spec, opts)
    rep = is_representative(f, tol)
    details = {"kind": f.kind, "representative": rep.ok, "closed": rep.closed,
               "worst_point": _s(rep.worst_point), "worst_gap": rep.worst_gap}
    ok, gap, wit = rep.ok, rep.worst_gap, _s(rep.worst_point)
    if spec.data["strong"]:
        st = is_strongly_representative(f, tol)
        details.update(strong=st.ok, expect_strong=spec.data["expect_strong"],
                       conjugate_worst_point=_s(st.worst_point), conjugate_worst_gap=st.worst_gap)
        ok = ok and st.ok == spec.data["expect_strong"]
        if not st.ok:
            gap, wit = st.worst_gap, _s(st.worst_point)
    return CheckResult(spec.name, spec.type, "pass" if ok else "fail", gap, tol, wit, details)


def _run_graph_invariance(spec, opts):
    from .reprfn import graph_invariance_check
    r = graph_invariance_check(spec.data["repr"], _tol(spec, opts))
    wit = None
    if not r.equal:
        wit = {"only_in_f": _s(r.only_first[:5]), "only_in_at": _s(r.only_second[:5])}
    return CheckResult(spec.name, spec.type, "pass" if r.equal else "fail", None, _tol(spec, opts),
                       wit, {"graph_size": len(r.graph), "at_graph_size": len(r.other)})


# ---------------------------------------------------------------- operators


def _harness_result(spec, rep) -> CheckResult:
    counts = {s: rep.count(s) for s in ("verified", "vacuous", "skipped", "counterexample")}
    details = {"instances": len(rep.outcomes), "counts": counts}
    comp = [o.composite for o in rep.outcomes if o.composite is not None]
    if comp:
        details["composite"] = {s: comp.count(s) for s in sorted(set(comp))}
    bad = rep.counterexamples
    wit = None
    if bad:
        wit = [o.instance.to_dict() for o in bad[:5]]
        verdict = "fail"
    elif rep.composite_failures:
        wit = [o.instance.to_dict() for o in rep.composite_failures[:5]]
        verdict = "fail"
    elif counts["verified"] == 0:
        verdict = "vacuous"
    else:
        verdict = "pass"
    return CheckResult(spec.name, spec.type, verdict, None, None, wit, details)


def _run_cc_maximality(spec, opts):
    from .monops import cc_maximality_harness
    from .reprfn import graph_of
    d = spec.data
    S = d["graph"] if d["graph"] is not None else graph_of(d["repr"], _tol(spec, opts))
    rep = cc_maximality_harness(S, d["instances"], d["e_grid"], d["es_grid"], extent=d["extent"])
    return _harness_result(spec, rep)


def _run_strong_maximality(spec, opts):
    from .monops import strong_maximality_harness
    d = spec.data
    rep = strong_maximality_harness(d["repr"], d["instances"], _tol(spec, opts), d["extent"],
                                    d["check_composite"])
    return _harness_result(spec, rep)


def _run_composite(spec, opts):
    from .monops import verify_composite_representability
    d = spec.data
    r = verify_composite_representability(d["f"], d["g"], d["M"], d["variant"], _tol(spec, opts),
                                          opts.max_cells)
    if r.status == d["expect"]:
        verdict = "pass"
    elif r.status == "inapplicable":
        verdict = "vacuous"
    else:
        verdict = "fail"
    details = {"variant": r.variant, "status": r.status, "expected": d["expect"],
               "graphs_equal": r.graphs_equal, "strongly_representative": r.strongly_representative,
               "qualification": r.qualification.to_dict() if r.qualification is not None else None,
               "notes": list(r.notes)}
    if r.closure_graph is not None:
        details["graph_size"] = len(r.closure_graph)
    wit = None
    if r.only_in_closure or r.only_in_combinatorial:
        wit = {"only_in_closure": _s(r.only_in_closure[:5]),
               "only_in_combinatorial": _s(r.only_in_combinatorial[:5])}
    return CheckResult(spec.name, spec.type, verdict, None, _tol(spec, opts), wit, details)


def _run_br_property(spec, opts):
    from .reprfn import br_sweep, graph_of
    d = spec.data
    f, tol = d["repr"], _tol(spec, opts)
    G = graph_of(f, tol)
    counts = {"witness": 0, "vacuous": 0, "near_miss": 0, "fail": 0}
    caveats, first_bad, first_wit = 0, None, None
    for sw in br_sweep(f, d["alphas"], d["betas"], d["points"], tol, graph=G):
        for k, v in sw.counts.items():
            counts[k] += v
        caveats += sw.coarse
        if sw.first_bad is not None and first_bad is None:
            p, r = sw.first_bad
            first_bad = {"alpha": str(sw.alpha), "beta": str(sw.beta), "point": _s(p), "status": r.status,
                         "gap": r.gap, "nearest": _s(r.witness)}
        if sw.first_witness is not None and first_wit is None:
            p, r = sw.first_witness
            first_wit = {"alpha": str(sw.alpha), "beta": str(sw.beta), "point": _s(p), "pair": _s(r.witness)}
    if first_bad is not None:
        verdict, wit = "fail", first_bad
    elif counts["witness"] == 0:
        verdict, wit = "vacuous", None
    else:
        verdict, wit = "pass", first_wit
    return CheckResult(spec.name, spec.type, verdict, None, tol, wit,
                       {"counts": counts, "coarse_grid_caveats": caveats, "graph_size": len(G)})


# ---------------------------------------------------------------- identities


def random_shear_instance(rng: np.random.Generator, max_dim: int = 3):
    """Random ``(G, R, box)`` with ``dim X + dim Z <= max_dim``."""
    dx = int(rng.integers(1, max_dim))
    dz = int(rng.integers(1, max_dim - dx + 1))
    R = RatLinMap(tuple(tuple(Fraction(int(v), int(rng.choice([1, 2]))) for v in rng.integers(-2, 3, dx))
                        for _ in range(dz)))
    step = Fraction(1, 2)
    box = LatticeGrid.from_bounds([-2] * (dx + dz), [2] * (dx + dz), step)
    k = int(rng.integers(1, 6))
    G = [tuple(Fraction(int(v), 2) for v in rng.integers(-4, 5, dx + dz)) for _ in range(k)]
    return G, R, box


def _run_shear_sets(spec, opts):
    from .quadab import shear_preimage_sets
    d = spec.data
    if "random" in d:
        rng = np.random.default_rng(opts.seed)
        bad, sizes = None, []
        for i in range(d["random"]):
            G, R, box = random_shear_instance(rng, d["max_dim"])
            lhs, rhs, eq = shear_preimage_sets(G, R, box)
            sizes.append(len(lhs))
            if not eq and bad is None:
                bad = {"instance": i, "G": _s(G), "R": _s(R.entries)}
        return CheckResult(spec.name, spec.type, "fail" if bad else "pass", None, 0.0, bad,
                           {"instances": d["random"], "seed": opts.seed, "total_points": sum(sizes)})
    lhs, rhs, eq = shear_preimage_sets(d["G"], d["R"], d["box"])
    wit = None
    if not eq:
        wit = {"only_lhs": _s(sorted(lhs - rhs)[:5]), "only_rhs": _s(sorted(rhs - lhs)[:5])}
    return CheckResult(spec.name, spec.type, "pass" if eq else "fail", None, 0.0, wit,
                       {"lhs_size": len(lhs), "rhs_size": len(rhs)})


def _run_random_weak_duality(spec, opts):
    from .corpus import random_coupled_setup
    from .quadab import lift_to_constrained, verify_constrained_duality, verify_coupled_duality
    d = spec.data
    rng = np.random.default_rng(opts.seed)
    bad, worst = None, np.inf
    for i in range(d["count"]):
        s = random_coupled_setup(rng, d["inf_rate"])
        r1 = verify_coupled_duality(s, max_cells=opts.max_cells, check_closed=False, qualify=False)
        r2 = verify_constrained_duality(lift_to_constrained(s, opts.max_cells), max_cells=opts.max_cells,
                                        check_closed=False, qualify=False)
        worst = min(worst, r1.weak_margin, r2.weak_margin)
        if not (r1.weak_ok and r2.weak_ok) and bad is None:
            bad = {"instance": i, "coupled_margin": r1.weak_margin, "constrained_margin": r2.weak_margin}
    return CheckResult(spec.name, spec.type, "fail" if bad else "pass", None, None, bad,
                       {"instances": d["count"], "seed": opts.seed, "smallest_margin": float(worst)})


_RUNNERS = {name[5:]: fn for name, fn in globals().items() if name.startswith("_run_")}


def run_check(spec: CheckSpec, opts: RunOptions = RunOptions()) -> CheckResult:
    """Run one check; exceptions become an ``error`` verdict."""
    t0 = time.perf_counter()
    try:
        res = _RUNNERS[spec.type](spec, opts)
    except Exception as e:  # reported, not raised
        res = CheckResult(spec.name, spec.type, "error", message=f"{type(e).__name__}: {e}")
    res.timing = time.perf_counter() - t0
    return res
