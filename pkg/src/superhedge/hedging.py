"""Zero-cost superhedging, superhedging costs and derived prices.

Every question about the hedgeable set C reduces to one LP assembled by
:class:`HedgingLP`: a vector of holdings per non-terminal node (terminal
holdings are fixed at zero), epigraph variables for cost terms with more than
one piece, domain and constraint rows, and one budget row per node whose
remaining terms depend on the query.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SlopeNotStabilized, UndefinedBase, ZeroPremium
from .lp import LinearProgram, LPBuilder, LpSolution, Status, solve
from .market import MarketModel, NumeraireReduction, PolyhedralConstraint, PolyhedralCost, eval_cost
from .tree import ScenarioTree

POS_HULL_TOL = 1e-9
ARBITRAGE_TOL = 1e-8


class Membership(str, enum.Enum):
    MEMBER = "Member"
    NOT_MEMBER = "NotMember"


class PriceStatus(str, enum.Enum):
    FINITE = "Finite"
    MINUS_INFINITY = "MinusInfinity"
    PLUS_INFINITY = "PlusInfinity"


@dataclass
class HedgeResult:
    status: Membership
    portfolio: np.ndarray | None = None
    residual: float = np.nan
    solution: LpSolution | None = field(default=None, repr=False)

    @property
    def member(self) -> bool:
        return self.status is Membership.MEMBER

    def __bool__(self) -> bool:
        return self.member


@dataclass
class PriceResult:
    value: float
    status: PriceStatus
    portfolio: np.ndarray | None = None
    diagnosis: str = ""
    residual: float = np.nan
    solution: LpSolution | None = field(default=None, repr=False)
    assembly: "HedgingLP | None" = field(default=None, repr=False)

    @property
    def finite(self) -> bool:
        return self.status is PriceStatus.FINITE


@dataclass(frozen=True)
class AdmissibilityReport:
    minus_p_in_rc: bool
    p_in_rc: bool
    p_in_pos: bool

    @property
    def admissible(self) -> bool:
        return self.minus_p_in_rc and not self.p_in_rc

    @property
    def note(self) -> str:
        if self.admissible:
            return "admissible: the superhedging cost is proper and attained"
        if self.p_in_rc:
            return "premium in recession cone, pi = -inf on dom pi"
        if not self.p_in_pos:
            return "-p not in rc C and p not in pos C: C differs from the whole space"
        return "-p not in rc C"


@dataclass(frozen=True)
class ArbitrageReport:
    found: bool
    value: float
    claim: np.ndarray | None = None
    portfolio: np.ndarray | None = None


# --------------------------------------------------------------------------
# assembly

class HedgingLP:
    """Shared LP skeleton for a cost/constraint system on a tree.

    ``homogeneous=True`` replaces every cost and constraint by its recession
    counterpart (offsets ``b`` and right-hand sides ``h`` set to zero).
    """

    def __init__(self, tree: ScenarioTree, costs: Sequence[PolyhedralCost],
                 constraints: Sequence[PolyhedralConstraint], carry: np.ndarray | None = None,
                 homogeneous: bool = False):
        self.tree = tree
        self.costs = costs
        self.constraints = constraints
        self.dim = costs[0].dim
        self.carry = np.ones((len(tree), self.dim)) if carry is None else carry
        self.homogeneous = homogeneous
        self.bld = LPBuilder()
        n, J = len(tree), self.dim

        self.x = np.full((n, J), -1, dtype=int)
        for k in tree.nonterminal:
            self.x[k] = self.bld.add_vars(J, name=f"x{k}")

        self.budget_idx: list[np.ndarray] = []
        self.budget_coef: list[np.ndarray] = []
        self.linear_grad = np.zeros((n, J))
        self.epi_rows: list[tuple[int, np.ndarray, float, int]] = []
        self.dom_rows: list[tuple[int, np.ndarray, float, int]] = []
        self.con_rows: list[tuple[int, np.ndarray, float, int]] = []
        for k in range(n):
            idx, coef = [], []
            for t in costs[k].terms:
                if t.b.size == 1:
                    i, c = self.delta_expr(k, t.a[0])
                    idx.append(i); coef.append(c)
                    self.linear_grad[k] += t.a[0]
                    continue
                e = self.bld.add_vars(1, name=f"e{k}")[0]
                idx.append([e]); coef.append([1.0])
                for ak, bk in zip(t.a, t.b):
                    i, c = self.delta_expr(k, ak)
                    r = self.bld.add_row(np.append(i, e), np.append(c, -1.0), "<=",
                                         0.0 if homogeneous else -bk)
                    self.epi_rows.append((k, ak, float(bk), r))
            dom = costs[k].domain
            for g, h in zip(dom.G, dom.h):
                i, c = self.delta_expr(k, g)
                if i.size:
                    r = self.bld.add_row(i, c, "<=", 0.0 if homogeneous else h)
                    self.dom_rows.append((k, g, float(h), r))
            self.budget_idx.append(np.concatenate(idx).astype(int) if idx else np.zeros(0, int))
            self.budget_coef.append(np.concatenate(coef) if coef else np.zeros(0))
            if not tree.is_leaf[k]:
                D = constraints[k]
                for g, h in zip(D.G, D.h):
                    r = self.bld.add_row(self.x[k], g, "<=", 0.0 if homogeneous else h)
                    self.con_rows.append((k, g, float(h), r))
        self.budget_rows = np.full(n, -1, dtype=int)

    @classmethod
    def for_model(cls, model: MarketModel, homogeneous: bool = False) -> "HedgingLP":
        return cls(model.tree, model.costs, model.constraints, model.carry(), homogeneous)

    def delta_expr(self, k: int, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Index/coefficient arrays for ``a @ (x_k - carry_k * x_parent)``."""
        idx, coef = [], []
        nz = np.flatnonzero(a)
        if self.x[k, 0] >= 0:
            idx.append(self.x[k, nz]); coef.append(a[nz])
        par = self.tree.parent[k]
        if par >= 0:
            idx.append(self.x[par, nz]); coef.append(-a[nz] * self.carry[k, nz])
        if not idx:
            return np.zeros(0, int), np.zeros(0)
        return np.concatenate(idx), np.concatenate(coef)

    def add_budget(self, k: int, extra_idx=(), extra_coef=(), rhs: float = 0.0) -> int:
        """Budget row ``S_k(dx_k) + extra <= rhs``."""
        idx = np.concatenate([self.budget_idx[k], np.asarray(extra_idx, dtype=int)])
        coef = np.concatenate([self.budget_coef[k], np.asarray(extra_coef, dtype=float)])
        if idx.size == 0:
            idx, coef = np.zeros(1, int), np.zeros(1)
            if self.bld.num_vars == 0:
                self.bld.add_vars(1, 0.0, 0.0, name="pad")
        r = self.bld.add_row(idx, coef, "<=", rhs)
        self.budget_rows[k] = r
        return r

    def portfolio(self, sol: LpSolution) -> np.ndarray:
        out = np.zeros(self.x.shape)
        mask = self.x >= 0
        out[mask] = sol.x[self.x[mask]]
        return out

    def build(self, maximize: bool = False) -> LinearProgram:
        return self.bld.build(maximize)


def _process(tree: ScenarioTree, c) -> np.ndarray:
    return tree.process(c)


def budget_residual(model: MarketModel, c, x, tol: float = 1e-9) -> float:
    """Largest violation of the nodewise budget and portfolio constraints.

    Returns ``inf`` when some trade leaves the cost domain.
    """
    tree = model.tree
    c = _process(tree, c)
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    nonroot = tree.parent >= 0
    prev[nonroot] = x[tree.parent[nonroot]] * model.carry()[nonroot]
    dx = x - prev
    worst = float(np.max(np.abs(x[tree.is_leaf]), initial=0.0))
    for k in range(len(tree)):
        val = eval_cost(model.costs[k], dx[k], tol)
        worst = max(worst, val + c[k])
        D = model.constraints[k]
        if D.h.size and not tree.is_leaf[k]:
            worst = max(worst, float(np.max(D.G @ x[k] - D.h)))
    return worst


# --------------------------------------------------------------------------
# primal operations

def membership(model: MarketModel, c) -> HedgeResult:
    """Decide whether ``c`` can be superhedged at zero cost."""
    c = _process(model.tree, c)
    asm = HedgingLP.for_model(model)
    for k in range(len(model.tree)):
        asm.add_budget(k, rhs=-c[k])
    sol = solve(asm.build())
    if sol.status is Status.OPTIMAL:
        x = asm.portfolio(sol)
        return HedgeResult(Membership.MEMBER, x, budget_residual(model, c, x), sol)
    return HedgeResult(Membership.NOT_MEMBER, solution=sol)


def price_lp(model: MarketModel, c, p) -> tuple[HedgingLP, int]:
    """Assemble ``min alpha`` s.t. ``c - alpha p`` is hedgeable; returns (assembly, alpha index)."""
    tree = model.tree
    c, p = _process(tree, c), _process(tree, p)
    if not np.any(p):
        raise ZeroPremium("premium process is identically zero")
    asm = HedgingLP.for_model(model)
    alpha = asm.bld.add_vars(1, name="alpha")[0]
    asm.bld.add_objective([alpha], [1.0])
    for k in range(len(tree)):
        asm.add_budget(k, [alpha], [-p[k]], -c[k])
    return asm, alpha


def superhedge_cost(model: MarketModel, c, p) -> PriceResult:
    """Least multiple of the premium ``p`` that makes ``c`` hedgeable."""
    asm, alpha = price_lp(model, c, p)
    sol = solve(asm.build())
    if sol.status is Status.OPTIMAL:
        x = asm.portfolio(sol)
        value = float(sol.x[alpha])
        cp = _process(model.tree, c) - value * _process(model.tree, p)
        return PriceResult(value, PriceStatus.FINITE, x, residual=budget_residual(model, cp, x),
                           solution=sol, assembly=asm)
    if sol.status is Status.UNBOUNDED:
        return PriceResult(-np.inf, PriceStatus.MINUS_INFINITY,
                           diagnosis="premium in recession cone, pi = -inf on dom pi",
                           solution=sol, assembly=asm)
    return PriceResult(np.inf, PriceStatus.PLUS_INFINITY,
                       diagnosis="claim outside dom pi: no multiple of the premium hedges it",
                       solution=sol, assembly=asm)


def recession_membership(model: MarketModel, c) -> bool:
    """Whether ``c`` lies in the recession cone of C (homogenized system feasible)."""
    c = _process(model.tree, c)
    asm = HedgingLP.for_model(model, homogeneous=True)
    for k in range(len(model.tree)):
        asm.add_budget(k, rhs=-c[k])
    return solve(asm.build()).status is Status.OPTIMAL


def positive_hull_membership(model: MarketModel, p, tol: float = POS_HULL_TOL) -> bool:
    """Whether ``gamma p`` is hedgeable for some ``gamma > tol`` (``gamma <= 1``).

    The zero claim is reported as outside the positive hull by convention.
    """
    p = _process(model.tree, p)
    if not np.any(p):
        return False
    asm = HedgingLP.for_model(model)
    gamma = asm.bld.add_vars(1, 0.0, 1.0, name="gamma")[0]
    asm.bld.add_objective([gamma], [1.0])
    for k in range(len(model.tree)):
        asm.add_budget(k, [gamma], [p[k]], 0.0)
    sol = solve(asm.build(maximize=True))
    return sol.status is Status.OPTIMAL and sol.value > tol


def arbitrage_check(model: MarketModel, tol: float = ARBITRAGE_TOL) -> ArbitrageReport:
    """Search for a hedgeable claim in ``[0, 1]`` at every node with positive mean."""
    tree = model.tree
    asm = HedgingLP.for_model(model)
    cv = asm.bld.add_vars(len(tree), 0.0, 1.0, name="c")
    asm.bld.add_objective(cv, tree.prob)
    for k in range(len(tree)):
        asm.add_budget(k, [cv[k]], [1.0], 0.0)
    sol = solve(asm.build(maximize=True))
    if sol.status is Status.OPTIMAL and sol.value > tol:
        return ArbitrageReport(True, sol.value, sol.x[cv].copy(), asm.portfolio(sol))
    return ArbitrageReport(False, max(sol.value, 0.0) if sol.optimal else 0.0)


def selling_price(model: MarketModel, cbar, c, p) -> float:
    """``pi(cbar + c) - pi(cbar)``."""
    base = superhedge_cost(model, cbar, p)
    if not base.finite:
        raise UndefinedBase(f"superhedging cost of the base claim is {base.value}")
    tree = model.tree
    return superhedge_cost(model, _process(tree, cbar) + _process(tree, c), p).value - base.value


def buying_price(model: MarketModel, cbar, c, p) -> float:
    return -selling_price(model, cbar, -_process(model.tree, c), p)


def marginal_price(model: MarketModel, cbar, c, p, alpha0: float = 1e-3, tol: float = 1e-9,
                   max_halvings: int = 30) -> float:
    """Directional derivative of pi at ``cbar`` in direction ``c``.

    pi is piecewise linear along the ray, so difference quotients become exact
    once the step is inside the first linear piece.
    """
    tree = model.tree
    base = superhedge_cost(model, cbar, p)
    if not base.finite:
        raise UndefinedBase(f"superhedging cost of the base claim is {base.value}")
    cbar, c = _process(tree, cbar), _process(tree, c)

    def slope(a):
        return (superhedge_cost(model, cbar + a * c, p).value - base.value) / a

    alpha = alpha0
    prev = slope(alpha)
    for _ in range(max_halvings):
        alpha /= 2.0
        cur = slope(alpha)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise SlopeNotStabilized(f"slopes {prev} and {cur} did not agree", (prev, cur))


def premium_admissibility(model: MarketModel, p) -> AdmissibilityReport:
    p = _process(model.tree, p)
    return AdmissibilityReport(recession_membership(model, -p), recession_membership(model, p),
                               positive_hull_membership(model, p))


# --------------------------------------------------------------------------
# numeraire-reduced formulation

def _reduced_lp(red: NumeraireReduction, c, p=None):
    model = red.model
    tree = model.tree
    carry = model.carry()[:, red.risky]
    asm = HedgingLP(tree, red.risky_costs, red.risky_constraints, carry)
    c = _process(tree, c)
    alpha = None
    if p is not None:
        p = _process(tree, p)
        if not np.any(p):
            raise ZeroPremium("premium process is identically zero")
        alpha = asm.bld.add_vars(1, name="alpha")[0]
        asm.bld.add_objective([alpha], [1.0])
    for leaf in tree.leaves:
        path = tree.path(leaf)
        idx = np.concatenate([asm.budget_idx[k] for k in path]).astype(int)
        coef = np.concatenate([asm.budget_coef[k] for k in path])
        if alpha is not None:
            idx = np.append(idx, alpha)
            coef = np.append(coef, -sum(p[k] for k in path))
        if idx.size == 0:
            idx, coef = np.zeros(1, int), np.zeros(1)
            if asm.bld.num_vars == 0:
                asm.bld.add_vars(1, 0.0, 0.0, name="pad")
        asm.bld.add_row(idx, coef, "<=", -sum(c[k] for k in path))
    return asm, alpha, c, p


def _full_portfolio(red: NumeraireReduction, asm: HedgingLP, sol: LpSolution, cp: np.ndarray) -> np.ndarray:
    """Rebuild cash holdings: cash absorbs the risky trading costs and the claims."""
    model = red.model
    tree = model.tree
    risky = asm.portfolio(sol)
    prev = np.zeros_like(risky)
    nonroot = tree.parent >= 0
    prev[nonroot] = risky[tree.parent[nonroot]] * asm.carry[nonroot]
    dx = risky - prev
    x = np.zeros((len(tree), model.dim))
    x[:, red.risky] = risky
    for k in range(len(tree)):
        if tree.is_leaf[k]:
            continue
        par = tree.parent[k]
        cash_prev = x[par, red.numeraire] if par >= 0 else 0.0
        spend = sum(t(dx[k]) for t in red.risky_costs[k].terms)
        x[k, red.numeraire] = cash_prev - spend - cp[k]
    return x


def reduced_membership(red: NumeraireReduction, c) -> HedgeResult:
    asm, _, c, _ = _reduced_lp(red, c)
    sol = solve(asm.build())
    if sol.status is Status.OPTIMAL:
        x = _full_portfolio(red, asm, sol, c)
        return HedgeResult(Membership.MEMBER, x, budget_residual(red.model, c, x), sol)
    return HedgeResult(Membership.NOT_MEMBER, solution=sol)


def reduced_superhedge_cost(red: NumeraireReduction, c, p) -> PriceResult:
    asm, alpha, c, p = _reduced_lp(red, c, p)
    sol = solve(asm.build())
    if sol.status is Status.OPTIMAL:
        value = float(sol.x[alpha])
        x = _full_portfolio(red, asm, sol, c - value * p)
        return PriceResult(value, PriceStatus.FINITE, x,
                           residual=budget_residual(red.model, c - value * p, x), solution=sol)
    if sol.status is Status.UNBOUNDED:
        return PriceResult(-np.inf, PriceStatus.MINUS_INFINITY,
                           diagnosis="premium in recession cone, pi = -inf on dom pi", solution=sol)
    return PriceResult(np.inf, PriceStatus.PLUS_INFINITY,
                       diagnosis="claim outside dom pi: no multiple of the premium hedges it", solution=sol)
