"""Algebra of monotone graphs and the cc-maximality harness.

Forms sums and parallel sums of sampled gradient graphs, confirms that
the parallel sum computed from its definition matches the inverse-sum
formula, and runs the composite and harness checks on a quadratic.
"""
from fractions import Fraction as F

from cavkit import (GridFn, Polytope, RatLinMap, cc_maximality_harness, graph_of, graph_sum,
                    is_monotone, parallel_sum, separable_repr, verify_composite_representability)
from cavkit.corpus import cc_instances, grid

Ew, Esw = grid(-6, 6), grid(-6, 6, F(1, 2))
q = separable_repr(GridFn.from_callable(Ew, lambda p: 0.5 * p[:, 0] ** 2, "x^2/2"), Esw)
a = separable_repr(GridFn.from_callable(Ew, lambda p: abs(p[:, 0]), "|x|"), Esw)
S, T = graph_of(q), graph_of(a)

total = graph_sum(S, T)
par = parallel_sum(S, T)
print(f"sum graph: {len(total)} pairs, monotone = {is_monotone(total)[0]}")
print(f"parallel sum: {len(par)} pairs, definition == inverse formula: "
      f"{par == parallel_sum(S, T, 'inverses')}")

E, Es = grid(-3, 3), grid(-3, 3, F(1, 2))
qs = separable_repr(GridFn.from_callable(E, lambda p: 0.5 * p[:, 0] ** 2, "x^2/2"), Es)
for variant in "abc":
    r = verify_composite_representability(qs, qs, RatLinMap.identity(1), variant)
    print(f"composite variant {variant}: {r.status}")

report = cc_maximality_harness(S, cc_instances(1), Ew, Esw, extent=(E, Es))
print("harness:", {s: report.count(s) for s in ("verified", "vacuous", "skipped", "counterexample")})
star = [o for o in report.outcomes if o.status == "verified"][0]
print("one verified instance:", star.instance.to_dict())
