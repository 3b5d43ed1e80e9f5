"""
Pricing a call in a complete binomial market
============================================

A stock worth 4 moves to 8 or 2 with equal probability and cash earns
nothing. The claim pays 3 in the up state. In a frictionless complete market
the superhedging cost coincides with the replication cost, the hedge is the
replicating portfolio and the deflator is the unique martingale density.
"""

import numpy as np

from superhedge import binomial_model, extract_deflator, martingale_residual, superhedge_cost

model = binomial_model(s0=4.0, up=8.0, down=2.0)
tree = model.tree
print(model, "nodes:", tree.ids)

# claims and premiums are adapted processes, one number per node
call = np.array([0.0, 3.0, 0.0])
p = np.array([1.0, 0.0, 0.0])  # premium paid in cash at the root

res = superhedge_cost(model, call, p)
print("superhedging cost:", res.value)
print("hedge at the root (cash, stock):", res.portfolio[0])
print("budget residual of the hedge:", res.residual)

# the dual side: a nonnegative deflator y with E sum p y = 1
cert = extract_deflator(model, call, p, verify_dual=True)
print("deflator:", tree.as_mapping(np.round(cert.y, 12)))
print("E sum c y - sigma(y) =", cert.value, " (sigma =", cert.sigma, ")")

# the marginal prices read off the certificate form a y-martingale
print("martingale residual:", martingale_residual(model, cert.y, cert.s).max)
