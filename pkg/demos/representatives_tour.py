"""Representative functions and the operators they encode.

Samples the normal-cone representative of an interval and its mirror
image, extracts their equality graphs, checks that the transform leaves
the graphs unchanged and runs the approximate-graph search.
"""
from fractions import Fraction as F

from cavkit import (Polytope, graph_invariance_check, graph_of, inverse_normal_repr,
                    is_representative, is_strongly_representative, normal_cone_repr)
from cavkit.corpus import grid
from cavkit.reprfn import br_sweep

E, Es = grid(-1, 1, F(1, 4)), grid(-2, 2, F(1, 4))
K = Polytope.interval(-F(1, 2), F(1, 2))

for f in (normal_cone_repr(K, [0], E, Es), inverse_normal_repr([0], K, E, Es)):
    print(f"== {f.kind}")
    print("  value at (1/2, 2):", f.value([F(1, 2)], [2]))
    print("  representative:", bool(is_representative(f)),
          " strongly:", bool(is_strongly_representative(f)))
    G = graph_of(f)
    print(f"  graph has {len(G)} pairs; first few:",
          [(str(x[0]), str(s[0])) for x, s in G.ordered[:5]])
    print("  graph unchanged by the transform:", bool(graph_invariance_check(f)))
    for sw in br_sweep(f, [F(1, 2)], [F(1, 2), F(1)], graph=G):
        print(f"  alpha={sw.alpha} beta={sw.beta}: {sw.counts}")
