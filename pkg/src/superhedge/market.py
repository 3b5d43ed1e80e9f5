"""Polyhedral cost functions, portfolio constraints and the market model.

A cost function is a finite sum of max-affine terms restricted to a polyhedral
domain::

    S(x) = sum_tau max_{k in tau} (a_k @ x + b_k)   if G @ x <= h,   +inf otherwise.

A single term is the general max-affine form; separable order books give one
term per asset, which keeps the number of pieces linear in the book depth
instead of exponential in the number of assets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (CrossedBook, MalformedTree, NegativeDeflator, NoNumeraire, NonMonotoneLadder,
                     NonpositivePrice, PolarOfNonCone, ValidationError)
from .lp import LPBuilder, Status, solve
from .tree import ScenarioTree

DEDUP_TOL = 1e-12


def _rows(G, h, dim: int) -> tuple[np.ndarray, np.ndarray]:
    G = np.asarray(G if G is not None else np.zeros((0, dim)), dtype=float).reshape(-1, dim)
    h = np.asarray(h if h is not None else np.zeros(0), dtype=float).ravel()
    if G.shape[0] != h.size:
        raise ValidationError("halfspace system has mismatched row counts")
    return G, h


class PolyhedralConstraint:
    """Closed convex polyhedron ``{x | G @ x <= h}`` containing the origin."""

    def __init__(self, G=None, h=None, dim: int | None = None):
        if dim is None:
            dim = np.asarray(G).shape[1]
        self.dim = int(dim)
        self.G, self.h = _rows(G, h, self.dim)
        if np.any(self.h < 0):
            raise ValidationError("constraint set must contain the origin (all h >= 0)")
        self.G.setflags(write=False)
        self.h.setflags(write=False)

    @classmethod
    def unconstrained(cls, dim: int) -> "PolyhedralConstraint":
        return cls(np.zeros((0, dim)), np.zeros(0), dim)

    @classmethod
    def box(cls, lower, upper) -> "PolyhedralConstraint":
        """``lower <= x <= upper`` with infinite entries dropped."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        dim = lower.size
        G, h = [], []
        for j in range(dim):
            e = np.eye(dim)[j]
            if np.isfinite(upper[j]):
                G.append(e); h.append(upper[j])
            if np.isfinite(lower[j]):
                G.append(-e); h.append(-lower[j])
        return cls(np.array(G).reshape(-1, dim), np.array(h), dim)

    @classmethod
    def lower_bound(cls, xbar) -> "PolyhedralConstraint":
        xbar = np.asarray(xbar, dtype=float)
        return cls.box(xbar, np.full(xbar.size, np.inf))

    @property
    def is_conical(self) -> bool:
        return bool(np.all(self.h == 0))

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.G @ x <= self.h + tol * (1.0 + np.abs(self.h))))

    def support(self, v) -> float:
        return constraint_support(self, v)

    def recession_cone(self) -> "PolyhedralConstraint":
        return recession_cone(self)

    def polar_cone(self) -> np.ndarray:
        return polar_cone(self)

    def scaled(self, s) -> "PolyhedralConstraint":
        """The set in coordinates ``u = s * x``: rows ``g / s``."""
        return PolyhedralConstraint(self.G / np.asarray(s, dtype=float), self.h, self.dim)

    def to_dict(self) -> dict:
        return {"rows": [{"g": g.tolist(), "h": float(hh)} for g, hh in zip(self.G, self.h)]}

    def __eq__(self, other):
        return (isinstance(other, PolyhedralConstraint) and np.array_equal(self.G, other.G)
                and np.array_equal(self.h, other.h))

    def __repr__(self):
        return f"PolyhedralConstraint(rows={self.h.size}, dim={self.dim})"


@dataclass(frozen=True)
class MaxAffine:
    """One term ``max_k (a[k] @ x + b[k])`` with ``max_k b[k] = 0``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if a.shape[0] != b.size or b.size == 0:
            raise ValidationError("a max-affine term needs matching, nonempty a and b")
        if np.any(b > DEDUP_TOL) or abs(b.max()) > DEDUP_TOL:
            raise ValidationError("cost pieces must satisfy max_k b_k = 0 so that S(0) = 0")
        b = np.minimum(b, 0.0)
        b[np.abs(b) <= DEDUP_TOL] = 0.0
        # drop coincident pieces
        keep: list[int] = []
        for k in range(b.size):
            if not any(np.all(np.abs(a[k] - a[i]) <= DEDUP_TOL) and abs(b[k] - b[i]) <= DEDUP_TOL
                       for i in keep):
                keep.append(k)
        a, b = a[keep], b[keep]
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __call__(self, x) -> float:
        return float(np.max(self.a @ x + self.b))


class PolyhedralCost:
    """Convex polyhedral cost function vanishing at the origin."""

    def __init__(self, terms: Iterable[MaxAffine | tuple], domain: PolyhedralConstraint | None = None,
                 dim: int | None = None):
        terms = [t if isinstance(t, MaxAffine) else MaxAffine(*t) for t in terms]
        if not terms:
            raise ValidationError("cost needs at least one term")
        self.dim = int(dim if dim is not None else terms[0].a.shape[1])
        if any(t.a.shape[1] != self.dim for t in terms):
            raise ValidationError("cost terms have inconsistent dimensions")
        self.terms: tuple[MaxAffine, ...] = tuple(terms)
        self.domain = domain if domain is not None else PolyhedralConstraint.unconstrained(self.dim)
        if self.domain.dim != self.dim:
            raise ValidationError("cost domain has the wrong dimension")

    @classmethod
    def from_pieces(cls, a, b=None, domain: PolyhedralConstraint | None = None) -> "PolyhedralCost":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.zeros(a.shape[0]) if b is None else b
        return cls([MaxAffine(a, b)], domain, a.shape[1])

    @classmethod
    def linear(cls, s) -> "PolyhedralCost":
        s = np.asarray(s, dtype=float)
        return cls.from_pieces(s[None, :])

    @property
    def pieces(self) -> tuple[np.ndarray, np.ndarray]:
        """The equivalent single max-affine representation (sums over term pieces)."""
        combos = itertools.product(*(range(t.b.size) for t in self.terms))
        a, b = [], []
        for ks in combos:
            a.append(sum(t.a[k] for t, k in zip(self.terms, ks)))
            b.append(sum(t.b[k] for t, k in zip(self.terms, ks)))
        return np.array(a), np.array(b)

    @property
    def is_sublinear(self) -> bool:
        return all(np.all(t.b == 0) for t in self.terms) and self.domain.is_conical

    @property
    def is_linear(self) -> bool:
        return all(t.b.size == 1 for t in self.terms) and self.domain.h.size == 0

    def gradient_if_linear(self) -> np.ndarray | None:
        if not self.is_linear:
            return None
        return sum(t.a[0] for t in self.terms)

    def __call__(self, x) -> float:
        return eval_cost(self, x)

    def recession(self, x) -> float:
        return recession_cost(self, x)

    def scaled(self, s) -> "PolyhedralCost":
        """``u -> S(u / s)``: the cost in market-value coordinates."""
        s = np.asarray(s, dtype=float)
        return PolyhedralCost([MaxAffine(t.a / s, t.b) for t in self.terms], self.domain.scaled(s), self.dim)

    def to_dict(self) -> dict:
        out = {"terms": [{"pieces": [{"a": ak.tolist(), "b": float(bk)} for ak, bk in zip(t.a, t.b)]}
                         for t in self.terms]}
        if self.domain.h.size:
            out["domain"] = self.domain.to_dict()["rows"]
        return out

    def __eq__(self, other):
        return (isinstance(other, PolyhedralCost) and len(self.terms) == len(other.terms)
                and all(np.array_equal(s.a, o.a) and np.array_equal(s.b, o.b)
                        for s, o in zip(self.terms, other.terms))
                and self.domain == other.domain)

    def __repr__(self):
        return f"PolyhedralCost(terms={len(self.terms)}, dim={self.dim})"


@dataclass(frozen=True)
class MarginalPriceSet:
    """``conv(generators) + cone(rays)``; rays come from domain faces through 0."""

    generators: np.ndarray
    rays: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def contains(self, s, tol: float = 1e-9) -> bool:
        s = np.asarray(s, dtype=float)
        K = self.generators.shape[0]
        R = self.rays.shape[0] if self.rays.size else 0
        bld = LPBuilder()
        th = bld.add_vars(K, 0.0)
        nu = bld.add_vars(R, 0.0)
        bld.add_row(th, 1.0, "=", 1.0)
        for j in range(s.size):
            idx = np.concatenate([th, nu])
            coef = np.concatenate([self.generators[:, j], self.rays[:, j] if R else []])
            bld.add_row(idx, coef, "=", s[j])
        return solve(bld.build()).status is Status.OPTIMAL


# --------------------------------------------------------------------------
# operations

def eval_cost(cost: PolyhedralCost, x, tol: float = 1e-12) -> float:
    x = np.asarray(x, dtype=float)
    if not cost.domain.contains(x, tol):
        return np.inf
    return float(sum(t(x) for t in cost.terms))


def recession_cost(cost: PolyhedralCost, x, tol: float = 1e-12) -> float:
    x = np.asarray(x, dtype=float)
    if np.any(cost.domain.G @ x > tol * (1.0 + np.max(np.abs(x), initial=0.0))):
        return np.inf
    return float(sum(np.max(t.a @ x) for t in cost.terms))


def marginal_price_set(cost: PolyhedralCost) -> MarginalPriceSet:
    """Subdifferential of the cost at the origin."""
    per_term = [t.a[t.b == 0] for t in cost.terms]
    gens: list[np.ndarray] = []
    for combo in itertools.product(*per_term):
        g = np.sum(combo, axis=0)
        if not any(np.all(np.abs(g - o) <= DEDUP_TOL) for o in gens):
            gens.append(g)
    rays = cost.domain.G[cost.domain.h == 0]
    return MarginalPriceSet(np.array(gens), rays.reshape(-1, cost.dim))


def conjugate_cost(cost: PolyhedralCost, y: float, v) -> float:
    """``sup_x {x @ v - y S(x)}`` as an LP over the epigraph."""
    if y < 0:
        raise NegativeDeflator(f"conjugate requires y >= 0, got {y}")
    v = np.asarray(v, dtype=float)
    bld = LPBuilder()
    x = bld.add_vars(cost.dim)
    bld.add_objective(x, v)
    for t in cost.terms:
        e = bld.add_vars(1)[0]
        bld.add_objective([e], [-y])
        for ak, bk in zip(t.a, t.b):
            bld.add_row(np.append(x, e), np.append(ak, -1.0), "<=", -bk)
    for g, h in zip(cost.domain.G, cost.domain.h):
        bld.add_row(x, g, "<=", h)
    sol = solve(bld.build(maximize=True))
    if sol.status is Status.UNBOUNDED:
        return np.inf
    if sol.status is not Status.OPTIMAL:  # pragma: no cover - x = 0 is always feasible
        raise ValidationError("conjugate LP infeasible")
    return max(sol.value, 0.0)


def constraint_support(D: PolyhedralConstraint, v) -> float:
    """``sup {x @ v | x in D}``; ``+inf`` when the LP is unbounded."""
    v = np.asarray(v, dtype=float)
    if D.h.size == 0:
        return 0.0 if not np.any(v) else np.inf
    bld = LPBuilder()
    x = bld.add_vars(D.dim)
    bld.add_objective(x, v)
    for g, h in zip(D.G, D.h):
        bld.add_row(x, g, "<=", h)
    sol = solve(bld.build(maximize=True))
    if sol.status is Status.UNBOUNDED:
        return np.inf
    return max(sol.value, 0.0)


def recession_cone(D: PolyhedralConstraint) -> PolyhedralConstraint:
    return PolyhedralConstraint(D.G, np.zeros_like(D.h), D.dim)


def polar_cone(D: PolyhedralConstraint) -> np.ndarray:
    """Generators of the polar cone ``{w | w @ x <= 0 for x in D}`` of a conical D."""
    if not D.is_conical:
        raise PolarOfNonCone("polar cone requested for a non-conical constraint set")
    return D.G.copy()


def cost_from_ladder(asks: Sequence[Sequence[tuple[float, float]]],
                     bids: Sequence[Sequence[tuple[float, float]]]) -> PolyhedralCost:
    """Separable cost of market orders walking the limit order book.

    ``asks[j]`` lists (price, depth) levels from the best ask outwards, ``bids[j]``
    likewise from the best bid. A depth of ``inf`` (or ``None``) is allowed on the
    last level; finite total depth caps the tradable volume.
    """
    if len(asks) != len(bids):
        raise ValidationError("asks and bids must cover the same assets")
    J = len(asks)
    terms = []
    G, h = [], []
    for j in range(J):
        ask = [(float(p), np.inf if d is None else float(d)) for p, d in asks[j]]
        bid = [(float(p), np.inf if d is None else float(d)) for p, d in bids[j]]
        for side, name in ((ask, "ask"), (bid, "bid")):
            if any(p <= 0 or not d > 0 for p, d in side):
                raise ValidationError(f"{name} levels need positive prices and depths")
            if any(not np.isfinite(d) for _, d in side[:-1]):
                raise ValidationError(f"only the last {name} level may have infinite depth")
        if any(ask[k + 1][0] < ask[k][0] for k in range(len(ask) - 1)):
            raise NonMonotoneLadder(f"ask prices of asset {j} must be nondecreasing")
        if any(bid[k + 1][0] > bid[k][0] for k in range(len(bid) - 1)):
            raise NonMonotoneLadder(f"bid prices of asset {j} must be nonincreasing")
        if ask and bid and bid[0][0] > ask[0][0]:
            raise CrossedBook(f"asset {j}: best bid {bid[0][0]} above best ask {ask[0][0]}")
        e = np.eye(J)[j]
        a, b = [], []
        cum = 0.0
        for k, (p, d) in enumerate(ask):
            a.append(p * e)
            b.append(-sum((p - ask[i][0]) * ask[i][1] for i in range(k)))
            cum += d
        if np.isfinite(cum):
            G.append(e); h.append(cum)
        cum = 0.0
        for k, (q, d) in enumerate(bid):
            a.append(q * e)
            b.append(-sum((bid[i][0] - q) * bid[i][1] for i in range(k)))
            cum += d
        if np.isfinite(cum):
            G.append(-e); h.append(cum)
        if not a:
            a, b = [np.zeros(J)], [0.0]
        terms.append(MaxAffine(np.array(a), np.array(b)))
    domain = PolyhedralConstraint(np.array(G).reshape(-1, J), np.array(h), J)
    return PolyhedralCost(terms, domain, J)


# --------------------------------------------------------------------------
# the market model

class MarketModel:
    """Costs and constraints on every node of a scenario tree.

    When ``unit_prices`` is given the model is expressed in market values
    ``u_n = unit_prices[n] * x_n``; holdings carried from the parent are then
    revalued by ``unit_prices[n] / unit_prices[parent]`` before trading.
    """

    def __init__(self, tree: ScenarioTree, costs: Sequence[PolyhedralCost],
                 constraints: Sequence[PolyhedralConstraint] | None = None,
                 assets: Sequence[str] | None = None, unit_prices=None):
        n = len(tree)
        if len(costs) != n:
            raise ValidationError(f"need one cost per node ({n}), got {len(costs)}")
        dim = costs[0].dim
        if constraints is None:
            constraints = [PolyhedralConstraint.unconstrained(dim)] * n
        if len(constraints) != n:
            raise ValidationError(f"need one constraint per node ({n}), got {len(constraints)}")
        if any(c.dim != dim for c in costs) or any(d.dim != dim for d in constraints):
            raise ValidationError("costs and constraints must share the asset dimension")
        self.tree = tree
        self.costs: tuple[PolyhedralCost, ...] = tuple(costs)
        self.constraints: tuple[PolyhedralConstraint, ...] = tuple(constraints)
        self.assets = tuple(assets) if assets is not None else tuple(f"asset{j}" for j in range(dim))
        if len(self.assets) != dim:
            raise ValidationError("asset labels do not match the dimension")
        if unit_prices is not None:
            unit_prices = np.asarray(unit_prices, dtype=float).reshape(n, dim)
            unit_prices.setflags(write=False)
        self.unit_prices = unit_prices

    @property
    def dim(self) -> int:
        return len(self.assets)

    @property
    def is_conical(self) -> bool:
        """All costs sublinear and all constraints conical."""
        return all(c.is_sublinear for c in self.costs) and all(d.is_conical for d in self.constraints)

    def carry(self) -> np.ndarray:
        """Per-node revaluation factors applied to the parent's holdings."""
        n = len(self.tree)
        R = np.ones((n, self.dim))
        if self.unit_prices is not None:
            nonroot = self.tree.parent >= 0
            R[nonroot] = self.unit_prices[nonroot] / self.unit_prices[self.tree.parent[nonroot]]
        return R

    def with_constraints(self, constraints: Sequence[PolyhedralConstraint]) -> "MarketModel":
        return MarketModel(self.tree, self.costs, constraints, self.assets, self.unit_prices)

    def __repr__(self):
        return f"MarketModel(nodes={len(self.tree)}, assets={list(self.assets)})"

    @classmethod
    def linear(cls, tree: ScenarioTree, prices, constraints=None, assets=None) -> "MarketModel":
        """Frictionless model ``S_n(x) = s_n @ x``."""
        prices = tree.process(prices)
        return cls(tree, [PolyhedralCost.linear(s) for s in prices], constraints, assets)


def to_market_values(model: MarketModel, s) -> MarketModel:
    """Rewrite the model in market-value coordinates ``u = s * x``."""
    s = model.tree.process(s, dim=model.dim)
    if np.any(s <= 0):
        raise NonpositivePrice("market-value transform needs strictly positive prices")
    prices = s if model.unit_prices is None else model.unit_prices * s
    return MarketModel(model.tree, [c.scaled(sn) for c, sn in zip(model.costs, s)],
                       [d.scaled(sn) for d, sn in zip(model.constraints, s)], model.assets, prices)


def from_market_values(model: MarketModel, s=None) -> MarketModel:
    """Inverse of :func:`to_market_values` (``s`` defaults to the model's unit prices)."""
    if s is None:
        if model.unit_prices is None:
            return model
        s = model.unit_prices
    s = model.tree.process(s, dim=model.dim)
    inv = 1.0 / s
    rest = None
    if model.unit_prices is not None:
        rest = model.unit_prices / s
        if np.allclose(rest, 1.0, rtol=0, atol=0):
            rest = None
    return MarketModel(model.tree, [c.scaled(v) for c, v in zip(model.costs, inv)],
                       [d.scaled(v) for d, v in zip(model.constraints, inv)], model.assets, rest)


@dataclass(frozen=True)
class NumeraireReduction:
    """A model with a perfectly liquid, unconstrained cash asset, cash removed.

    Membership of a claim reduces to the existence of risky positions whose
    accumulated trading costs plus accumulated claims are nonpositive along
    every path.
    """

    model: MarketModel
    numeraire: int
    risky_costs: tuple[PolyhedralCost, ...]
    risky_constraints: tuple[PolyhedralConstraint, ...]

    @property
    def risky(self) -> list[int]:
        return [j for j in range(self.model.dim) if j != self.numeraire]

    def membership(self, c):
        from .hedging import reduced_membership
        return reduced_membership(self, c)

    def superhedge_cost(self, c, p):
        from .hedging import reduced_superhedge_cost
        return reduced_superhedge_cost(self, c, p)


def reduce_with_numeraire(model: MarketModel, numeraire: int = 0) -> NumeraireReduction:
    """Split off a cash asset with unit cost that is free of constraints."""
    j0 = numeraire
    if not 0 <= j0 < model.dim:
        raise NoNumeraire(f"asset index {j0} out of range")
    rest = [j for j in range(model.dim) if j != j0]
    if model.unit_prices is not None and not np.allclose(model.carry()[:, j0], 1.0):
        raise NoNumeraire("numeraire must not be revalued between dates")
    costs, cons = [], []
    for n, (S, D) in enumerate(zip(model.costs, model.constraints)):
        kappa = 0.0
        terms = []
        for t in S.terms:
            col = t.a[:, j0]
            if np.ptp(col) > DEDUP_TOL:
                raise NoNumeraire(f"node {n}: cost is not additive in the numeraire")
            kappa += col[0]
            terms.append(MaxAffine(t.a[:, rest], t.b))
        if abs(kappa - 1.0) > DEDUP_TOL:
            raise NoNumeraire(f"node {n}: numeraire unit cost {kappa} != 1")
        if np.any(S.domain.G[:, j0] != 0) or np.any(D.G[:, j0] != 0):
            raise NoNumeraire(f"node {n}: numeraire appears in a domain or constraint row")
        dom = PolyhedralConstraint(S.domain.G[:, rest], S.domain.h, len(rest))
        costs.append(PolyhedralCost(terms, dom, len(rest)))
        cons.append(PolyhedralConstraint(D.G[:, rest], D.h, len(rest)))
    return NumeraireReduction(model, j0, tuple(costs), tuple(cons))


def scale_depth(model: MarketModel, factor: float) -> MarketModel:
    """Multiply every order-book depth by ``factor``: ``S -> factor * S(x / factor)``.

    Large factors approach the recession cost; constraints are left unchanged.
    """
    if not factor > 0:
        raise ValidationError("depth factor must be positive")
    costs = [PolyhedralCost([MaxAffine(t.a, factor * t.b) for t in S.terms],
                            PolyhedralConstraint(S.domain.G, factor * S.domain.h, S.dim), S.dim)
             for S in model.costs]
    return MarketModel(model.tree, costs, model.constraints, model.assets, model.unit_prices)
