"""
Bid-ask spreads: selling, buying and marginal prices
====================================================

With a spread the superhedging cost is no longer linear. A seller charges
the superhedging cost of the claim, a buyer pays at most minus the
superhedging cost of its negative, and between them lie the marginal prices
obtained from the one-sided derivatives of the cost at the current position.
"""

import numpy as np

from superhedge import (bid_ask_model, buying_price, extract_deflator, marginal_price, selling_price,
                        superhedge_cost)

# stock quoted [1, 2] today and [2.5, 3] or [0.5, 0.8] tomorrow
model = bid_ask_model(bid=1.0, ask=2.0, up=(2.5, 3.0), down=(0.5, 0.8))
p = np.array([1.0, 0.0, 0.0])
digital = np.array([0.0, 1.0, 0.0])  # pays 1 if the stock goes up
zero = np.zeros(3)

print("selling price:", selling_price(model, zero, digital, p))
print("buying price: ", buying_price(model, zero, digital, p))

# one-sided derivatives at an empty book: pi'(0; c) and -pi'(0; -c)
up = marginal_price(model, zero, digital, p)
down = -marginal_price(model, zero, -digital, p)
print("marginal prices: [%.6f, %.6f]" % (down, up))

# the extracted price system lies inside the quoted spreads at every node
for c in (digital, -digital, np.array([0.0, -1.0, 2.0])):
    cert = extract_deflator(model, c, p)
    print("claim", c + 0.0, "-> stock prices", np.round(cert.s[:, 1], 6), "deflator", np.round(cert.y, 6))

# scaling the claim shows the convexity of the cost
for a in (0.5, 1.0, 2.0, 4.0):
    print(f"pi({a} * digital) = {superhedge_cost(model, a * digital, p).value:.6f}")
