"""
Arbitrage without unbounded profits
===================================

A stock that deterministically doubles is an arbitrage. Without position
limits the superhedging cost is minus infinity: buying more stock always
helps. With lower bounds on holdings the arbitrage persists, yet the set of
hedgeable claims is closed, since strictly positive prices and holdings
bounded below rule out costless directions at infinity.
"""

from superhedge import (arbitrage_check, arbitrage_model, closedness_condition, positive_price_exists,
                        superhedge_cost)

for constrained in (False, True):
    model = arbitrage_model(constrained=constrained)
    arb = arbitrage_check(model)
    res = superhedge_cost(model, [0.0, 0.0], [1.0, 0.0])
    pos = positive_price_exists(model)
    print(f"constrained={constrained}")
    print("  arbitrage found:", arb.found, " claim:", None if arb.claim is None else arb.claim.round(6))
    print("  superhedging cost of zero:", res.value, res.status.value, res.diagnosis or "")
    print("  positive prices:", pos.exists, " recession cones in the orthant:", pos.recession_nonnegative)
    print("  closedness condition satisfied:", closedness_condition(model).satisfied)
