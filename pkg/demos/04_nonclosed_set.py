"""
A market without arbitrage whose hedgeable set is not closed
============================================================

Two risky assets trade at prices (1, 1) today and (1, 2) or (1, 0)
tomorrow, next to a cash account. Today's position must satisfy
(x1 + 1)(x2 + 1) >= 1 with x2 > -1, a convex set that is not polyhedral.
Claims paying c in the second state with c approaching 1 can be hedged, but
the limit claim cannot: the set of hedgeable claims is open on that face.

Polyhedral solvers only see closed sets, so the set is bracketed by an
inner approximation (chords of the hyperbola on x2 >= -1 + delta) and an
outer one (tangents plus x2 >= -1). The limit claim is rejected by every
inner approximation and accepted by the outer one.
"""

from superhedge import (arbitrage_check, closedness_condition, counterexample_inner, counterexample_outer,
                        membership, nonclosedness_witness)

outer = counterexample_outer()
inner = [counterexample_inner(d) for d in (0.1, 0.01, 0.001)]

edge = [0.0, -1.0, 1.0]
for eps in (0.1, 0.01, 0.001):
    c = [0.0, -1.0, 1.0 - 2 * eps]
    print(f"c = {c}: inner(delta={eps}) member = {membership(counterexample_inner(eps), c).member}")

rep = nonclosedness_witness(inner, outer, edge, ["0.1", "0.01", "0.001"])
print("edge claim", edge, "inner:", rep.inner, "outer:", rep.outer, "-> witness:", rep.witness)
rep = nonclosedness_witness(inner, outer, [0.0, -1.0, 0.5])
print("interior claim inner:", rep.inner, "outer:", rep.outer)

print("arbitrage:", arbitrage_check(outer).found)
clo = closedness_condition(outer)
for v in clo.violations:
    print(f"closedness condition fails at node {v.node}: direction {v.direction.round(6)}")
