"""Superhedging of claim processes in convex illiquid markets on scenario trees."""

from .diagnostics import closedness_condition, nonclosedness_witness, positive_price_exists
from .duality import (DualCertificate, Deflator, attainment_certificate, bipolar_separation, extract_deflator,
                      martingale_residual, polar_membership, support_function_C1, support_function_direct)
from .errors import SuperhedgeError
from .hedging import (HedgeResult, Membership, PriceResult, PriceStatus, arbitrage_check, buying_price,
                      marginal_price, membership, positive_hull_membership, premium_admissibility,
                      recession_membership, selling_price, superhedge_cost)
from .instances import (arbitrage_model, bid_ask_model, binomial_model, counterexample_inner,
                        counterexample_outer, random_model, two_period_bid_ask)
from .lp import LinearProgram, LPBuilder, LpSolution, Status, Tolerances, solve, use_tolerances
from .market import (MarginalPriceSet, MarketModel, MaxAffine, PolyhedralConstraint, PolyhedralCost,
                     conjugate_cost, constraint_support, cost_from_ladder, eval_cost, from_market_values,
                     marginal_price_set, polar_cone, recession_cone, recession_cost, reduce_with_numeraire,
                     scale_depth, to_market_values)
from .tree import Node, ScenarioTree, build_tree, conditional_expectation, pairing, uniform_tree

__version__ = "0.1.0"
