"""Sufficient conditions for closedness of C and the non-closedness harness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hedging import membership
from .lp import LPBuilder, Status, solve
from .market import MarketModel, PolyhedralConstraint, PolyhedralCost

CONE_TOL = 1e-9
POSITIVITY_TOL = 1e-9


@dataclass(frozen=True)
class NodeCheck:
    node: str
    satisfied: bool
    direction: np.ndarray | None = None
    terminal: bool = False

    def to_dict(self) -> dict:
        out = {"node": self.node, "satisfied": self.satisfied, "terminal": self.terminal}
        if self.direction is not None:
            out["direction"] = self.direction.tolist()
        return out


@dataclass(frozen=True)
class ClosednessReport:
    nodes: tuple[NodeCheck, ...]

    @property
    def satisfied(self) -> bool:
        return all(n.satisfied for n in self.nodes)

    @property
    def violations(self) -> list[NodeCheck]:
        return [n for n in self.nodes if not n.satisfied]

    def to_dict(self) -> dict:
        return {"satisfied": self.satisfied, "nodes": [n.to_dict() for n in self.nodes]}


@dataclass(frozen=True)
class PositivePriceReport:
    exists: bool
    prices: np.ndarray | None
    margins: np.ndarray
    recession_nonnegative: bool
    recession_by_node: np.ndarray

    def to_dict(self, tree) -> dict:
        return {"exists": self.exists, "recession_nonnegative": self.recession_nonnegative,
                "margins": tree.as_mapping(self.margins),
                "prices": None if self.prices is None else tree.as_mapping(self.prices)}


@dataclass(frozen=True)
class GapReport:
    inner: tuple[bool, ...]
    outer: bool
    labels: tuple[str, ...] = field(default_factory=tuple)

    @property
    def witness(self) -> bool:
        """Outer accepts while every inner refinement rejects."""
        return self.outer and not any(self.inner)

    @property
    def agree(self) -> bool:
        return all(m == self.outer for m in self.inner)


def _recession_kernel(cost: PolyhedralCost, D: PolyhedralConstraint) -> tuple[LPBuilder, np.ndarray]:
    """LP rows for ``{x in D_inf : S_inf(x) <= 0}`` intersected with the unit box."""
    bld = LPBuilder()
    x = bld.add_vars(cost.dim, -1.0, 1.0, name="x")
    e = bld.add_vars(len(cost.terms), name="e")
    for t, ev in zip(cost.terms, e):
        for ak in t.a:
            bld.add_row(np.append(x, ev), np.append(ak, -1.0), "<=", 0.0)
    bld.add_row(e, 1.0, "<=", 0.0)
    for g in cost.domain.G:
        bld.add_row(x, g, "<=", 0.0)
    for g in D.G:
        bld.add_row(x, g, "<=", 0.0)
    return bld, x


def _cone_direction(cost: PolyhedralCost, D: PolyhedralConstraint, tol: float) -> np.ndarray | None:
    J = cost.dim
    for j in range(J):
        for sign in (1.0, -1.0):
            bld, x = _recession_kernel(cost, D)
            bld.add_objective([x[j]], [sign])
            sol = solve(bld.build(maximize=True))
            if sol.status is Status.OPTIMAL and sol.value > tol:
                d = sol.x[x]
                return d / np.max(np.abs(d))
    return None


def closedness_condition(model: MarketModel, tol: float = CONE_TOL) -> ClosednessReport:
    """Test ``D_inf ∩ {S_inf <= 0} = {0}`` at every node where a position is held.

    Terminal holdings are fixed at zero, so terminal nodes satisfy the
    condition trivially and are reported as such.
    """
    tree = model.tree
    out = []
    for k, nid in enumerate(tree.ids):
        if tree.is_leaf[k]:
            out.append(NodeCheck(nid, True, terminal=True))
            continue
        d = _cone_direction(model.costs[k], model.constraints[k], tol)
        out.append(NodeCheck(nid, d is None, d))
    return ClosednessReport(tuple(out))


def _price_margin(cost: PolyhedralCost) -> tuple[float, np.ndarray]:
    """``max eps`` s.t. some ``s`` in the subdifferential at 0 has ``s >= eps`` (eps capped at 1)."""
    J = cost.dim
    bld = LPBuilder()
    s = bld.add_vars(J, name="s")
    eps = bld.add_vars(1, -np.inf, 1.0, name="eps")[0]
    bld.add_objective([eps], [1.0])
    idx, cols = [s], [-np.eye(J)]
    for t in cost.terms:
        active = t.a[t.b == 0]
        th = bld.add_vars(active.shape[0], 0.0, name="th")
        bld.add_row(th, 1.0, "=", 1.0)
        idx.append(th); cols.append(active.T)
    rays = cost.domain.G[cost.domain.h == 0]
    if rays.size:
        nu = bld.add_vars(rays.shape[0], 0.0, name="nu")
        idx.append(nu); cols.append(rays.T)
    allidx = np.concatenate(idx)
    M = np.hstack(cols)
    for j in range(J):
        bld.add_row(allidx, M[j], "=", 0.0)
        bld.add_row([eps, s[j]], [1.0, -1.0], "<=", 0.0)
    sol = solve(bld.build(maximize=True))
    return sol.value, sol.x[s]


def _recession_in_orthant(D: PolyhedralConstraint, tol: float) -> bool:
    """Whether ``{x | G x <= 0}`` lies in the nonnegative orthant."""
    for j in range(D.dim):
        bld = LPBuilder()
        x = bld.add_vars(D.dim, -1.0, 1.0)
        for g in D.G:
            bld.add_row(x, g, "<=", 0.0)
        bld.add_objective([x[j]], [1.0])
        if solve(bld.build()).value < -tol:
            return False
    return True


def positive_price_exists(model: MarketModel, tol: float = POSITIVITY_TOL) -> PositivePriceReport:
    """Strictly positive marginal prices at every node, and ``D_inf`` inside the orthant.

    The orthant condition is evaluated where positions are held, i.e. at
    non-terminal nodes.
    """
    tree = model.tree
    n = len(tree)
    margins = np.zeros(n)
    prices = np.zeros((n, model.dim))
    for k in range(n):
        margins[k], prices[k] = _price_margin(model.costs[k])
    orth = np.ones(n, dtype=bool)
    for k in tree.nonterminal:
        orth[k] = _recession_in_orthant(model.constraints[k], tol)
    exists = bool(np.all(margins > tol))
    return PositivePriceReport(exists, prices if exists else None, margins, bool(orth.all()), orth)


def nonclosedness_witness(inner: Sequence[MarketModel], outer: MarketModel, c,
                          labels: Sequence[str] = ()) -> GapReport:
    """Membership of ``c`` under inner and outer polyhedral approximations.

    Persistent rejection by every inner refinement together with acceptance by
    the outer approximation marks ``c`` as a boundary point that the true
    (non-polyhedral) set fails to contain.
    """
    ins = tuple(membership(m, c).member for m in inner)
    return GapReport(ins, membership(outer, c).member, tuple(labels))
