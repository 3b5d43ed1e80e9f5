"""
Illiquidity from a limit order book
===================================

Trading costs come from an order book: each price level offers a finite
quantity. Hedging a large position walks the book, so the cost per unit of
the claim rises with its size. Deeper books bring the cost of a fixed
position back down towards the frictionless value.
"""

import numpy as np

from superhedge import MarketModel, build_tree, cost_from_ladder, scale_depth, superhedge_cost

tree = build_tree([("0", None, 1.0), ("u", "0", 0.5), ("d", "0", 0.5)])

# cash is perfectly liquid; the stock book has three ask and two bid levels
book = cost_from_ladder(asks=[[(1.0, None)], [(10.0, 1.0), (10.5, 1.0), (11.5, 2.0)]],
                        bids=[[(1.0, None)], [(9.5, 1.0), (9.0, 3.0)]])
up = cost_from_ladder(asks=[[(1.0, None)], [(12.0, None)]], bids=[[(1.0, None)], [(11.5, None)]])
down = cost_from_ladder(asks=[[(1.0, None)], [(8.5, None)]], bids=[[(1.0, None)], [(8.0, None)]])
model = MarketModel(tree, [book, up, down], assets=["cash", "stock"])
p = np.array([1.0, 0.0, 0.0])

# a forward on n shares: receive n (S_T - 10) at the end
payoff = np.array([0.0, 11.75 - 10.0, 8.25 - 10.0])
print(" size   cost     cost per unit")
for n in (0.5, 1.0, 2.0, 3.0, 4.0, 5.0):
    res = superhedge_cost(model, n * payoff, p)
    per = res.value / n if res.finite else res.value
    print(f"{n:5.1f}  {res.value:8.4f}  {per:8.4f}  {res.status.value}")

# multiply the quantity at every level of every book
for factor in (1.0, 2.0, 10.0):
    res = superhedge_cost(scale_depth(model, factor), 4.0 * payoff, p)
    print(f"depth x{factor:<4}: pi = {res.value:.4f}")
