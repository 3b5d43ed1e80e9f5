"""Reference models and random model generators."""

from __future__ import annotations

import numpy as np

from .market import MarketModel, MaxAffine, PolyhedralConstraint, PolyhedralCost, cost_from_ladder
from .tree import ScenarioTree, build_tree, uniform_tree


def binomial_model(s0: float = 4.0, up: float = 8.0, down: float = 2.0, q: float = 0.5) -> MarketModel:
    """One period, cash plus one stock, frictionless and unconstrained."""
    tree = build_tree([("0", None, 1.0), ("u", "0", q), ("d", "0", 1.0 - q)])
    prices = np.array([[1.0, s0], [1.0, up], [1.0, down]])
    return MarketModel.linear(tree, prices, assets=["cash", "stock"])


def bid_ask_model(bid: float = 1.0, ask: float = 2.0, up: tuple[float, float] = (2.5, 3.0),
                  down: tuple[float, float] = (0.5, 0.8)) -> MarketModel:
    """One period, liquid cash plus a stock quoted with a bid-ask spread at every node."""
    tree = build_tree([("0", None, 1.0), ("u", "0", 0.5), ("d", "0", 0.5)])
    costs = []
    for b, a in [(bid, ask), up, down]:
        costs.append(cost_from_ladder([[(1.0, None)], [(a, None)]], [[(1.0, None)], [(b, None)]]))
    return MarketModel(tree, costs, assets=["cash", "stock"])


def two_period_bid_ask(quotes: dict[str, tuple[float, float]]) -> MarketModel:
    """Binary two-period tree with a cash asset and one stock quoted per node."""
    tree = uniform_tree(2, 2)
    costs = [cost_from_ladder([[(1.0, None)], [(quotes[i][1], None)]], [[(1.0, None)], [(quotes[i][0], None)]])
             for i in tree.ids]
    return MarketModel(tree, costs, assets=["cash", "stock"])


# --------------------------------------------------------------------------
# the non-closed example: constraint (x1 + 1)(x2 + 1) >= 1 on two risky assets

def _f(x2):
    return 1.0 / (x2 + 1.0) - 1.0


def _counterexample_base() -> tuple[ScenarioTree, list[PolyhedralCost]]:
    tree = build_tree([("0", None, 1.0), ("w1", "0", 0.5), ("w2", "0", 0.5)])
    prices = np.array([[1.0, 1.0, 1.0], [1.0, 1.0, 2.0], [1.0, 1.0, 0.0]])
    return tree, [PolyhedralCost.linear(s) for s in prices]


def counterexample_inner(delta: float, upper: float = 10.0, points: int = 40) -> MarketModel:
    """Polyhedral subset of the hyperbolic constraint: x2 in [-1 + delta, upper], x1 above chords."""
    tree, costs = _counterexample_base()
    lo = -1.0 + delta
    grid = np.unique(np.concatenate([lo + (upper - lo) * np.geomspace(1e-6, 1.0, points) - 1e-6 * (upper - lo),
                                     [lo, 0.0, upper]]))
    grid = grid[(grid >= lo) & (grid <= upper)]
    G, h = [], []
    for u, w in zip(grid[:-1], grid[1:]):
        slope = (_f(w) - _f(u)) / (w - u)
        # x1 >= f(u) + slope (x2 - u)
        G.append([0.0, -1.0, slope]); h.append(-(_f(u) - slope * u))
    G.append([0.0, 0.0, -1.0]); h.append(-lo)
    G.append([0.0, 0.0, 1.0]); h.append(upper)
    h = np.maximum(np.array(h), 0.0)  # chords through the origin give h = -0.0 or tiny roundoff
    D0 = PolyhedralConstraint(np.array(G), h, 3)
    free = PolyhedralConstraint.unconstrained(3)
    return MarketModel(tree, costs, [D0, free, free], assets=["cash", "x1", "x2"])


def counterexample_outer(tangents=None) -> MarketModel:
    """Polyhedral superset: tangent halfspaces of the hyperbola plus x2 >= -1."""
    tree, costs = _counterexample_base()
    if tangents is None:
        tangents = np.concatenate([-1.0 + np.geomspace(1e-3, 1.0, 20), [0.0, 1.0, 3.0, 10.0]])
    G, h = [], []
    for t in np.unique(tangents):
        d = -1.0 / (t + 1.0) ** 2
        # x1 >= f(t) + d (x2 - t)
        G.append([0.0, -1.0, d]); h.append(-(_f(t) - d * t))
    G.append([0.0, 0.0, -1.0]); h.append(1.0)
    h = np.maximum(np.array(h), 0.0)
    D0 = PolyhedralConstraint(np.array(G), h, 3)
    free = PolyhedralConstraint.unconstrained(3)
    return MarketModel(tree, costs, [D0, free, free], assets=["cash", "x1", "x2"])


def arbitrage_model(constrained: bool = True) -> MarketModel:
    """Cash and a stock that deterministically doubles.

    With ``constrained`` the holdings are bounded below by ``min(xbar, 0)``
    where ``xbar`` is the arbitrage strategy (borrow one unit of cash, buy one
    share); the cap at zero keeps the origin feasible.
    """
    tree = build_tree([("0", None, 1.0), ("1", "0", 1.0)])
    prices = np.array([[1.0, 1.0], [1.0, 2.0]])
    cons = None
    if constrained:
        xbar = np.array([-1.0, 1.0])
        cons = [PolyhedralConstraint.lower_bound(np.minimum(xbar, 0.0)),
                PolyhedralConstraint.lower_bound(np.zeros(2))]
    return MarketModel.linear(tree, prices, cons, assets=["cash", "stock"])


# --------------------------------------------------------------------------
# random instances

def random_tree(rng: np.random.Generator, max_horizon: int = 3, max_branching: int = 3) -> ScenarioTree:
    T = int(rng.integers(1, max_horizon + 1))
    spec = [("0", None, 1.0)]
    frontier = [("0", 1.0)]
    for _ in range(T):
        nxt = []
        for nid, p in frontier:
            b = int(rng.integers(1, max_branching + 1))
            w = rng.uniform(0.5, 1.5, size=b)
            w /= w.sum()
            for k in range(b):
                cid = f"{nid}.{k}"
                spec.append((cid, nid, p * w[k]))
                nxt.append((cid, p * w[k]))
        frontier = nxt
    return build_tree(spec)


def martingale_prices(rng: np.random.Generator, tree: ScenarioTree, dim: int, vol: float = 0.3) -> np.ndarray:
    """Positive mid prices forming a martingale under the tree's probabilities."""
    s = np.zeros((len(tree), dim))
    s[0] = rng.uniform(1.0, 5.0, size=dim)
    cond = tree.conditional_prob()
    for k in range(len(tree)):
        kids = tree.children[k]
        if kids.size == 0:
            continue
        if kids.size == 1:
            s[kids[0]] = s[k]
            continue
        u = rng.uniform(-vol, vol, size=(kids.size, dim))
        u -= (cond[kids] @ u)[None, :]
        u = np.clip(u, -0.9, None)
        u -= (cond[kids] @ u)[None, :]
        s[kids] = s[k] * (1.0 + u)
    return s


def random_ladder(rng: np.random.Generator, mid: float, conical: bool = False, levels: int | None = None,
                  depth_scale: float = 5.0):
    """Ask and bid ladders around ``mid``; ``conical`` gives one infinite level per side."""
    half = mid * rng.uniform(0.0, 0.1)
    ask0, bid0 = mid + half, mid - half
    if conical:
        return [(ask0, None)], [(bid0, None)]
    n = levels or int(rng.integers(1, 4))
    asks, bids = [], []
    pa, pb = ask0, bid0
    for k in range(n):
        depth = None if (k == n - 1 and rng.random() < 0.5) else float(rng.uniform(0.5, 1.0) * depth_scale)
        asks.append((pa, depth))
        bids.append((pb, depth))
        pa *= 1.0 + rng.uniform(0.0, 0.1)
        pb *= 1.0 - rng.uniform(0.0, 0.1)
    return asks, bids


def random_model(rng: np.random.Generator, max_horizon: int = 3, max_branching: int = 3, max_assets: int = 3,
                 conical: bool = False, constraints: str = "random", cash: bool = True) -> MarketModel:
    """Random ladder model without arbitrage.

    Mid prices are a martingale and every ladder brackets the mid price, so
    ``y = 1`` together with the mid prices is a consistent price system.
    Asset 0 is frictionless cash when ``cash`` is set. ``constraints`` is one
    of ``"none"``, ``"box"``, ``"cone"``, ``"lower"`` or ``"random"``.
    """
    tree = random_tree(rng, max_horizon, max_branching)
    J = int(rng.integers(1 if not cash else 2, max_assets + 1))
    mid = martingale_prices(rng, tree, J)
    if cash:
        mid[:, 0] = 1.0
    kind = constraints
    if kind == "random":
        kind = rng.choice(["none", "box", "cone"] if not conical else ["none", "cone"])
    costs, cons = [], []
    for k in range(len(tree)):
        asks, bids = [], []
        for j in range(J):
            if cash and j == 0:
                a, b = [(1.0, None)], [(1.0, None)]
            else:
                a, b = random_ladder(rng, mid[k, j], conical)
            asks.append(a); bids.append(b)
        costs.append(cost_from_ladder(asks, bids))
        cons.append(_random_constraint(rng, kind, J, cash))
    return MarketModel(tree, costs, cons)


def _random_constraint(rng: np.random.Generator, kind: str, J: int, cash: bool) -> PolyhedralConstraint:
    first = 1 if cash else 0
    if kind == "none":
        return PolyhedralConstraint.unconstrained(J)
    if kind == "box":
        lo = np.full(J, -np.inf)
        hi = np.full(J, np.inf)
        lo[first:] = -rng.uniform(0.5, 3.0, size=J - first)
        hi[first:] = rng.uniform(0.5, 3.0, size=J - first)
        return PolyhedralConstraint.box(lo, hi)
    if kind == "lower":
        return PolyhedralConstraint.lower_bound(-rng.uniform(0.5, 5.0, size=J))
    if kind == "cone":
        # no-short-selling on a random subset of the risky assets
        rows = [np.eye(J)[j] * -1.0 for j in range(first, J) if rng.random() < 0.6]
        if not rows:
            return PolyhedralConstraint.unconstrained(J)
        return PolyhedralConstraint(np.array(rows), np.zeros(len(rows)), J)
    raise ValueError(f"unknown constraint kind {kind!r}")


def random_claim(rng: np.random.Generator, tree: ScenarioTree, scale: float = 1.0) -> np.ndarray:
    return rng.normal(scale=scale, size=len(tree))


def random_premium(rng: np.random.Generator, tree: ScenarioTree) -> np.ndarray:
    """Nonnegative premium paid at least at the root."""
    p = np.where(rng.random(len(tree)) < 0.3, rng.uniform(0.0, 1.0, size=len(tree)), 0.0)
    p[0] = 1.0
    return p


def root_premium(tree: ScenarioTree) -> np.ndarray:
    p = np.zeros(len(tree))
    p[0] = 1.0
    return p


def random_term_model(rng: np.random.Generator, tree: ScenarioTree, dim: int) -> MarketModel:
    """Non-separable costs: a single max-affine term per node around a martingale."""
    mid = martingale_prices(rng, tree, dim)
    costs = []
    for k in range(len(tree)):
        K = int(rng.integers(1, 4))
        a = mid[k] * (1.0 + rng.uniform(-0.1, 0.1, size=(K, dim)))
        a = np.vstack([mid[k], a])
        b = np.concatenate([[0.0], -rng.uniform(0.0, 1.0, size=K)])
        costs.append(PolyhedralCost([MaxAffine(a, b)], dim=dim))
    return MarketModel(tree, costs)
