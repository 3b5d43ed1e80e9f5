"""Deflators, the support function of C and dual certificates.

The support function of C at a deflator ``y >= 0`` is the value of

    min  sum_n sum_k Lam_nk (-b_k) + sum N_ni h_i + sum R_ni h_i
    s.t. sum_{k in term} Lam_nk = prob_n y_n                   (every term)
         V_n = sum_k Lam_nk a_k + sum_i N_ni g_i               (dual holdings)
         sum_{m child of n} carry_m * V_m - V_n = G_n^T R_n    (non-terminal n)
         Lam, N, R >= 0

where ``V_n = prob_n v_n``. The first two groups are the conjugates of the
scaled costs, the last one the support function of the portfolio constraint
evaluated at the conditional increment of ``v``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConicalOnly, GapTooLarge, UndefinedBase
from .hedging import HedgingLP, PriceResult, superhedge_cost
from .lp import LPBuilder, Status, solve
from .market import MarketModel
from .tree import ScenarioTree, pairing

NORMALIZATION_TOL = 1e-8
GAP_TOL = 1e-7
SEPARATION_TOL = 1e-9
CONSTANT_ROW_TOL = 1e-12


@dataclass(frozen=True)
class Deflator:
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if np.any(y < 0):
            raise ValueError("deflators are nonnegative")
        object.__setattr__(self, "y", y)


@dataclass
class DualCertificate:
    y: np.ndarray
    v: np.ndarray
    sigma: float
    value: float
    price: float
    s: np.ndarray | None = None
    gap: float = 0.0
    normalization: float = 1.0

    def to_dict(self, tree: ScenarioTree) -> dict:
        return {"y": {"values": tree.as_mapping(self.y)},
                "v": {"values": tree.as_mapping(self.v)},
                "sigma": self.sigma, "value": self.value, "price": self.price,
                "gap": self.gap, "normalization": self.normalization}


@dataclass(frozen=True)
class PolarResult:
    member: bool
    s: np.ndarray | None = None


@dataclass(frozen=True)
class ResidualReport:
    per_node: np.ndarray
    max: float


@dataclass(frozen=True)
class Separation:
    inside: bool
    y: np.ndarray | None = None
    sigma: float = 0.0
    pairing: float = 0.0


# --------------------------------------------------------------------------
# support function

class _DualAssembly:
    """Builds the dual-holdings LP; ``y`` either fixed data or LP variables."""

    def __init__(self, model: MarketModel, y: np.ndarray | None):
        tree = model.tree
        n, J = len(tree), model.dim
        self.bld = bld = LPBuilder()
        self.y_vars = None if y is not None else bld.add_vars(n, 0.0, name="y")
        # V[k][j] accumulated as (idx list, coef list, constant)
        V_idx = [[[] for _ in range(J)] for _ in range(n)]
        V_coef = [[[] for _ in range(J)] for _ in range(n)]
        V_const = np.zeros((n, J))
        self.lam: list[tuple[int, np.ndarray]] = []

        def add_to_V(k, var, vec, fixed_weight=None):
            for j in np.flatnonzero(vec):
                if fixed_weight is None:
                    V_idx[k][j].append(var); V_coef[k][j].append(vec[j])
                else:
                    V_const[k, j] += fixed_weight * vec[j]

        for k in range(n):
            w = None if y is None else tree.prob[k] * y[k]
            for t in model.costs[k].terms:
                if t.b.size == 1:
                    if y is None:
                        add_to_V(k, self.y_vars[k], tree.prob[k] * t.a[0])
                    else:
                        add_to_V(k, None, t.a[0], w)
                    continue
                lam = bld.add_vars(t.b.size, 0.0, name=f"lam{k}")
                bld.add_objective(lam, -t.b)
                if y is None:
                    bld.add_row(np.append(lam, self.y_vars[k]), np.append(np.ones(lam.size), -tree.prob[k]), "=", 0.0)
                else:
                    bld.add_row(lam, 1.0, "=", w)
                for var, ak in zip(lam, t.a):
                    add_to_V(k, var, ak)
                self.lam.append((k, lam))
            dom = model.costs[k].domain
            if dom.h.size:
                nu = bld.add_vars(dom.h.size, 0.0, name=f"nu{k}")
                bld.add_objective(nu, dom.h)
                for var, g in zip(nu, dom.G):
                    add_to_V(k, var, g)
        carry = model.carry()
        self.rho = {}
        for k in tree.nonterminal:
            D = model.constraints[k]
            rho = bld.add_vars(D.h.size, 0.0, name=f"rho{k}")
            bld.add_objective(rho, D.h)
            self.rho[k] = rho
            for j in range(J):
                idx = list(V_idx[k][j])
                coef = [-a for a in V_coef[k][j]]
                const = -V_const[k, j]
                scale = abs(V_const[k, j])
                for m in tree.children[k]:
                    idx += V_idx[m][j]
                    coef += [carry[m, j] * a for a in V_coef[m][j]]
                    const += carry[m, j] * V_const[m, j]
                    scale += abs(carry[m, j] * V_const[m, j])
                idx += list(rho)
                coef += list(-D.G[:, j])
                if not idx:
                    # a fixed-y martingale condition; compare up to roundoff
                    if abs(const) > CONSTANT_ROW_TOL * (1.0 + scale):
                        self.trivially_infeasible = True
                    continue
                bld.add_row(idx, coef, "=", -const)
        self.V_idx, self.V_coef, self.V_const = V_idx, V_coef, V_const

    trivially_infeasible = False

    def V(self, x: np.ndarray) -> np.ndarray:
        n, J = self.V_const.shape
        out = self.V_const.copy()
        for k in range(n):
            for j in range(J):
                if self.V_idx[k][j]:
                    out[k, j] += np.dot(x[self.V_idx[k][j]], self.V_coef[k][j])
        return out


def support_function_C1(model: MarketModel, y) -> tuple[float, np.ndarray | None]:
    """``sup {E sum c_t y_t | c in C}`` and an attaining dual holding process ``v``."""
    tree = model.tree
    y = tree.process(y)
    if np.any(y < 0):
        return np.inf, None
    asm = _DualAssembly(model, y)
    if asm.trivially_infeasible:
        return np.inf, None
    if asm.bld.num_vars == 0:
        return 0.0, asm.V(np.zeros(0)) / tree.prob[:, None]
    sol = solve(asm.bld.build())
    if sol.status is not Status.OPTIMAL:
        return np.inf, None
    return max(sol.value, 0.0), asm.V(sol.x) / tree.prob[:, None]


def support_function_direct(model: MarketModel, y) -> float:
    """The same support function from its definition: maximize the pairing over C."""
    tree = model.tree
    y = tree.process(y)
    asm = HedgingLP.for_model(model)
    cv = asm.bld.add_vars(len(tree), name="c")
    asm.bld.add_objective(cv, tree.prob * y)
    for k in range(len(tree)):
        asm.add_budget(k, [cv[k]], [1.0], 0.0)
    sol = solve(asm.build(maximize=True))
    if sol.status is Status.UNBOUNDED:
        return np.inf
    return max(sol.value, 0.0)


# --------------------------------------------------------------------------
# deflator extraction

def multipliers(result: PriceResult) -> tuple[np.ndarray, np.ndarray, float]:
    """Deflator, dual holdings and support value read off a pricing LP's multipliers."""
    asm = result.assembly
    sol = result.solution
    tree = asm.tree
    mu = np.maximum(-sol.duals[asm.budget_rows], 0.0)
    V = mu[:, None] * asm.linear_grad
    sigma = 0.0
    for k, a, b, r in asm.epi_rows:
        lam = max(-sol.duals[r], 0.0)
        V[k] += lam * a
        sigma += -lam * b
    for k, g, h, r in asm.dom_rows:
        nu = max(-sol.duals[r], 0.0)
        V[k] += nu * g
        sigma += nu * h
    for k, g, h, r in asm.con_rows:
        sigma += max(-sol.duals[r], 0.0) * h
    return mu / tree.prob, V / tree.prob[:, None], sigma


def extract_deflator(model: MarketModel, c, p, verify_dual: bool = False,
                     result: PriceResult | None = None) -> DualCertificate:
    """Optimal deflator of the pricing problem with an independent gap check.

    With ``verify_dual`` the dual pricing LP is solved from scratch as well
    and its optimum is compared with the primal value.
    """
    tree = model.tree
    c, p = tree.process(c), tree.process(p)
    res = result if result is not None else superhedge_cost(model, c, p)
    if not res.finite:
        raise UndefinedBase(f"superhedging cost is {res.value}; no deflator to extract")
    y, v, _ = multipliers(res)
    sigma, _ = support_function_C1(model, y)
    value = pairing(tree, c, y) - sigma
    norm = pairing(tree, p, y)
    gap = abs(value - res.value)
    if abs(norm - 1.0) > NORMALIZATION_TOL:
        raise GapTooLarge(f"normalization E sum p y = {norm} differs from 1")
    if not gap <= GAP_TOL * max(1.0, abs(res.value)):
        raise GapTooLarge(f"dual value {value} differs from price {res.value} by {gap}")
    if verify_dual:
        dual_val, _ = dual_price(model, c, p)
        if abs(dual_val - res.value) > GAP_TOL * max(1.0, abs(res.value)):
            raise GapTooLarge(f"dual LP optimum {dual_val} differs from price {res.value}")
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(y[:, None] > 1e-12, v / y[:, None], np.nan)
    return DualCertificate(y, v, sigma, value, res.value, s, gap, norm)


def dual_price(model: MarketModel, c, p) -> tuple[float, np.ndarray | None]:
    """``sup {E sum c y - sigma(y) | E sum p y = 1, y >= 0}`` solved directly."""
    tree = model.tree
    c, p = tree.process(c), tree.process(p)
    asm = _DualAssembly(model, None)
    # the assembly minimizes sigma; maximize pairing - sigma instead
    asm.bld.scale_objective(-1.0)
    asm.bld.add_objective(asm.y_vars, tree.prob * c)
    asm.bld.add_row(asm.y_vars, tree.prob * p, "=", 1.0)
    sol = solve(asm.bld.build(maximize=True))
    if sol.status is Status.OPTIMAL:
        return sol.value, sol.x[asm.y_vars]
    if sol.status is Status.UNBOUNDED:
        return np.inf, None
    return -np.inf, None


def verify_certificate(model: MarketModel, c, p, y, price: float, tol: float = GAP_TOL) -> bool:
    """Recheck a stored certificate: normalization and zero duality gap."""
    tree = model.tree
    c, p, y = tree.process(c), tree.process(p), tree.process(y)
    if np.any(y < -1e-12):
        return False
    sigma, _ = support_function_C1(model, np.maximum(y, 0.0))
    return (abs(pairing(tree, p, y) - 1.0) <= NORMALIZATION_TOL
            and abs(pairing(tree, c, y) - sigma - price) <= tol * max(1.0, abs(price)))


# --------------------------------------------------------------------------
# conical models

def polar_membership(model: MarketModel, y) -> PolarResult:
    """Whether some marginal price selection ``s`` makes ``y s`` a supermartingale in the polar sense.

    Requires sublinear costs and conical constraints. The condition at a
    non-terminal node ``n`` is ``E[y' s' carry | n] - y_n s_n`` in the polar of
    the constraint cone held over the following period.
    """
    if not model.is_conical:
        raise ConicalOnly("polar membership needs sublinear costs and conical constraints")
    tree = model.tree
    y = tree.process(y)
    if np.any(y < 0):
        return PolarResult(False)
    n, J = len(tree), model.dim
    bld = LPBuilder()
    s = np.array([bld.add_vars(J, name=f"s{k}") for k in range(n)])
    for k in range(n):
        cost = model.costs[k]
        idx = [s[k]]
        coef = [-np.eye(J)]
        for t in cost.terms:
            th = bld.add_vars(t.b.size, 0.0, name=f"th{k}")
            bld.add_row(th, 1.0, "=", 1.0)
            idx.append(th); coef.append(t.a.T)
        if cost.domain.h.size:
            nu = bld.add_vars(cost.domain.h.size, 0.0, name=f"nu{k}")
            idx.append(nu); coef.append(cost.domain.G.T)
        allidx = np.concatenate(idx)
        M = np.hstack(coef)
        for j in range(J):
            bld.add_row(allidx, M[j], "=", 0.0)
    carry = model.carry()
    for k in tree.nonterminal:
        D = model.constraints[k]
        rho = bld.add_vars(D.h.size, 0.0, name=f"rho{k}")
        for j in range(J):
            idx = [s[k, j]] + [s[m, j] for m in tree.children[k]] + list(rho)
            coef = ([-tree.prob[k] * y[k]] + [tree.prob[m] * y[m] * carry[m, j] for m in tree.children[k]]
                    + list(-D.G[:, j]))
            bld.add_row(idx, coef, "=", 0.0)
    sol = solve(bld.build())
    if sol.status is Status.OPTIMAL:
        return PolarResult(True, sol.x[s])
    return PolarResult(False)


def martingale_residual(model: MarketModel, y, s) -> ResidualReport:
    """Sup-norm distance of ``E[delta(y s) | n]`` to the polar of the recession cone of ``D_n``."""
    tree = model.tree
    y = tree.process(y)
    s = tree.process(s, dim=model.dim)
    carry = model.carry()
    ys = y[:, None] * s * carry
    expected = tree.expect_children(ys)
    out = np.zeros(len(tree))
    for k in tree.nonterminal:
        w = expected[k] - y[k] * s[k]
        G = model.constraints[k].G
        if G.shape[0] == 0:
            out[k] = float(np.max(np.abs(w), initial=0.0))
            continue
        bld = LPBuilder()
        rho = bld.add_vars(G.shape[0], 0.0)
        t = bld.add_vars(1, 0.0)[0]
        bld.add_objective([t], [1.0])
        for j in range(model.dim):
            bld.add_row(np.append(rho, t), np.append(G[:, j], -1.0), "<=", w[j])
            bld.add_row(np.append(rho, t), np.append(-G[:, j], -1.0), "<=", -w[j])
        out[k] = solve(bld.build()).value
    return ResidualReport(out, float(out.max(initial=0.0)))


# --------------------------------------------------------------------------
# separation and attainment

def bipolar_separation(model: MarketModel, c) -> Separation:
    """Either ``c`` is hedgeable or a deflator ``y`` with ``sigma(y) <= 1 < E sum c y``.

    In conical models the returned ``y`` has ``sigma(y) = 0`` and ``E sum c y = 2``.
    The candidate comes from the Farkas certificate of the infeasible
    membership LP; a direct dual LP is the fallback.
    """
    from .hedging import membership
    tree = model.tree
    c = tree.process(c)
    res = membership(model, c)
    if res.member:
        return Separation(True)
    candidates = []
    lam = res.solution.farkas
    if lam is not None:
        # budget rows come last, one per node, in node order
        mu = np.maximum(lam[-len(tree):], 0.0)
        candidates.append(mu / tree.prob)
    candidates.append(_separating_by_lp(model, c))
    for y in candidates:
        if y is None or not np.any(y > 0):
            continue
        sigma, _ = support_function_C1(model, y)
        q = pairing(tree, c, y)
        if not np.isfinite(sigma) or q <= sigma + SEPARATION_TOL * max(1.0, abs(q)):
            continue
        scale = 2.0 / q if sigma <= SEPARATION_TOL * q else 2.0 / (q + sigma)
        y = y * scale
        return Separation(False, y, sigma * scale, q * scale)
    raise GapTooLarge("membership LP infeasible but no separating deflator was certified")


def _separating_by_lp(model: MarketModel, c) -> np.ndarray | None:
    tree = model.tree
    asm = _DualAssembly(model, None)
    asm.bld.scale_objective(-1.0)
    asm.bld.add_objective(asm.y_vars, tree.prob * c)
    asm.bld.add_row(asm.y_vars, tree.prob, "<=", 1.0)
    sol = solve(asm.bld.build(maximize=True))
    if sol.status is Status.OPTIMAL and sol.value > 0:
        return sol.x[asm.y_vars]
    return None


def attainment_slacks(model: MarketModel, c, p, y, samples: Iterable) -> np.ndarray:
    """``P(c; c') - E sum c' y`` for each sample ``c'``."""
    tree = model.tree
    c, p, y = tree.process(c), tree.process(p), tree.process(y)
    base = superhedge_cost(model, c, p)
    if not base.finite:
        raise UndefinedBase(f"superhedging cost of the base claim is {base.value}")
    out = []
    for cp in samples:
        cp = tree.process(cp)
        sell = superhedge_cost(model, c + cp, p).value - base.value
        out.append(sell - pairing(tree, cp, y))
    return np.array(out)


def attainment_certificate(model: MarketModel, c, p, y, samples: Iterable, tol: float = GAP_TOL) -> bool:
    """Whether ``y`` is dominated by the selling price: ``P(c; c') >= E sum c' y``."""
    return bool(np.all(attainment_slacks(model, c, p, y, samples) >= -tol))


def certificate_json(tree: ScenarioTree, cert: DualCertificate) -> str:
    return json.dumps(cert.to_dict(tree), indent=2)


def verification_report(cert: DualCertificate) -> str:
    lines = [f"price            {cert.price:.12g}",
             f"E sum c y        {cert.value + cert.sigma:.12g}",
             f"sigma_C(y)       {cert.sigma:.12g}",
             f"duality gap      {cert.gap:.3e}",
             f"E sum p y        {cert.normalization:.12g}",
             f"min y            {float(np.min(cert.y)):.12g}"]
    return "\n".join(lines)
