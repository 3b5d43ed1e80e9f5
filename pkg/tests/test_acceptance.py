"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import time

import numpy as np
import pytest

from superhedge.diagnostics import closedness_condition, nonclosedness_witness, positive_price_exists
from superhedge.duality import (attainment_slacks, extract_deflator, martingale_residual, support_function_C1,
                                support_function_direct)
from superhedge.hedging import arbitrage_check, budget_residual, membership, superhedge_cost
from superhedge.instances import (arbitrage_model, binomial_model, counterexample_inner, counterexample_outer,
                                  martingale_prices, random_claim, random_model, random_premium, random_tree,
                                  root_premium)
from superhedge.lp import Status, solve
from superhedge.market import MarketModel, reduce_with_numeraire, to_market_values
from superhedge.tree import pairing

from lp_oracle import oracle, random_lp


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail=""):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}{'  ' + detail if detail else ''}")
        assert ok, f"criterion {number} failed: {detail}"
    return emit


def test_01_counterexample_reproduction(report):
    t0 = time.perf_counter()
    outer = counterexample_outer()
    inner = [counterexample_inner(d) for d in (0.1, 0.01, 0.001)]
    edge = nonclosedness_witness(inner, outer, [0.0, -1.0, 1.0])
    interior = nonclosedness_witness(inner, outer, [0.0, -1.0, 0.5])
    arb = arbitrage_check(outer)
    clo = closedness_condition(outer)
    elapsed = time.perf_counter() - t0
    ok = (edge.witness and interior.outer and all(interior.inner) and not arb.found
          and [v.node for v in clo.violations] == [outer.tree.ids[0]] and elapsed < 1.0)
    report(1, "counterexample reproduction", ok,
           f"edge inner={edge.inner} outer={edge.outer}; interior inner={interior.inner}; "
           f"arbitrage={arb.found}; violations={[v.node for v in clo.violations]}; {elapsed:.2f}s")


def test_02_strong_duality(report):
    rng = np.random.default_rng(1002)
    t0 = time.perf_counter()
    worst, failures = 0.0, 0
    for _ in range(200):
        model = random_model(rng, constraints=str(rng.choice(["box", "cone"])))
        c = random_claim(rng, model.tree)
        p = random_premium(rng, model.tree)
        res = superhedge_cost(model, c, p)
        if not res.finite:
            failures += 1
            continue
        cert = extract_deflator(model, c, p, result=res)
        sigma, _ = support_function_C1(model, cert.y)
        dual = pairing(model.tree, c, cert.y) - sigma
        err = abs(dual - res.value) / max(1.0, abs(res.value))
        worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and worst <= 1e-6 and elapsed < 60.0
    report(2, "strong duality on 200 random instances", ok,
           f"max rel gap {worst:.2e}, non-finite {failures}, {elapsed:.1f}s")


def test_03_price_properties(report):
    rng = np.random.default_rng(1003)
    bad = []
    for i in range(100):
        conical = i % 4 == 0
        model = random_model(rng, max_horizon=2, conical=conical)
        tree = model.tree
        p = random_premium(rng, tree)
        c1, c2 = random_claim(rng, tree), random_claim(rng, tree)
        r1, r2 = superhedge_cost(model, c1, p), superhedge_cost(model, c2, p)
        if not (r1.finite and r2.finite):
            bad.append((i, "status"))
            continue
        for r, c in ((r1, c1), (r2, c2)):
            if r.residual > 1e-8 or budget_residual(model, c - r.value * p, r.portfolio) > 1e-8:
                bad.append((i, "certificate"))
        for a in (-2.0, 0.5, 3.0):
            if abs(superhedge_cost(model, c1 + a * p, p).value - (r1.value + a)) > 1e-8:
                bad.append((i, "translation"))
        up = c1 + rng.uniform(0.0, 1.0, size=len(tree))
        if superhedge_cost(model, up, p).value < r1.value - 1e-9:
            bad.append((i, "monotonicity"))
        if superhedge_cost(model, (c1 + c2) / 2, p).value > (r1.value + r2.value) / 2 + 1e-7:
            bad.append((i, "convexity"))
        if superhedge_cost(model, np.zeros(len(tree)), p).value > 1e-9:
            bad.append((i, "zero"))
        if conical:
            for lam in (0.5, 2.5):
                if abs(superhedge_cost(model, lam * c1, p).value - lam * r1.value) > 1e-7 * max(1.0, lam * abs(r1.value)):
                    bad.append((i, "homogeneity"))
    report(3, "translation, monotonicity, convexity, homogeneity, certificates", not bad,
           f"{len(bad)} violations {bad[:5]}")


def test_04_support_function_consistency(report):
    rng = np.random.default_rng(1004)
    worst, mismatch, infinite, checked = 0.0, 0, 0, 0
    for _ in range(50):
        model = random_model(rng)
        tree = model.tree
        y0 = extract_deflator(model, random_claim(rng, tree), root_premium(tree)).y
        neg = rng.uniform(0.0, 2.0, size=len(tree))
        neg[rng.integers(len(tree))] = -0.5
        for y in (y0, y0 * rng.uniform(0.7, 1.3, size=y0.size), rng.uniform(0.0, 2.0, size=len(tree)), neg):
            a, b = support_function_C1(model, y)[0], support_function_direct(model, y)
            checked += 1
            if np.isinf(a) or np.isinf(b):
                infinite += 1
                mismatch += not (np.isinf(a) and np.isinf(b))
            else:
                worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    ok = mismatch == 0 and worst <= 1e-6
    report(4, "support function vs definitional LP", ok,
           f"{checked} pairs, {infinite} infinite, mismatched infinities {mismatch}, max rel err {worst:.2e}")


def test_05_martingale_specialization(report):
    rng = np.random.default_rng(1005)
    worst, y0_err = 0.0, 0.0
    for _ in range(40):
        tree = random_tree(rng)
        J = int(rng.integers(2, 4))
        s = martingale_prices(rng, tree, J)
        s[:, 0] = 1.0
        model = MarketModel.linear(tree, s)
        cert = extract_deflator(model, random_claim(rng, tree), root_premium(tree))
        worst = max(worst, martingale_residual(model, cert.y, s).max)
        y0_err = max(y0_err, abs(cert.y[0] - 1.0))
    ok = worst < 1e-8 and y0_err <= 1e-8
    report(5, "deflators make prices martingales in linear models", ok,
           f"max residual {worst:.2e}, |y0 - 1| {y0_err:.2e}")


def test_06_binomial_oracle(report):
    model = binomial_model()
    c, p = np.array([0.0, 3.0, 0.0]), np.array([1.0, 0.0, 0.0])
    theta = np.linalg.solve(np.array([[1.0, 8.0], [1.0, 2.0]]), np.array([3.0, 0.0]))
    price = theta @ np.array([1.0, 4.0])
    # E[y1] = 1 and E[y1 s1] = s0 with probabilities 1/2
    y1 = np.linalg.solve(np.array([[0.5, 0.5], [0.5 * 8.0, 0.5 * 2.0]]), np.array([1.0, 4.0]))
    res = superhedge_cost(model, c, p)
    cert = extract_deflator(model, c, p, result=res)
    ok = (abs(res.value - price) <= 1e-8 and abs(res.portfolio[0, 1] - theta[1]) <= 1e-8
          and abs(theta[1] - 0.5) <= 1e-12 and np.max(np.abs(cert.y[1:] - y1)) <= 1e-8)
    report(6, "binomial replication oracle", ok,
           f"pi={res.value:.12g} (oracle {price:.12g}), stock={res.portfolio[0, 1]:.12g}, y1={cert.y[1:]}")


def test_07_attainment(report):
    rng = np.random.default_rng(1007)
    worst = np.inf
    for _ in range(30):
        model = random_model(rng, max_horizon=2, max_branching=2)
        tree = model.tree
        c, p = random_claim(rng, tree), random_premium(rng, tree)
        cert = extract_deflator(model, c, p)
        samples = rng.normal(size=(100, len(tree)))
        worst = min(worst, float(attainment_slacks(model, c, p, cert.y, samples).min()))
    report(7, "attainment against 100 directions on 30 instances", worst >= -1e-7, f"min slack {worst:.2e}")


def _boundary_claims(rng, model, k):
    p = root_premium(model.tree)
    out = []
    for _ in range(k):
        c = random_claim(rng, model.tree)
        out.append(c - superhedge_cost(model, c, p).value * p + rng.choice([-1.0, 1.0]) * 0.05 * p)
    return out


def test_08_transforms(report):
    rng = np.random.default_rng(1008)
    num_err = mv_err = 0.0
    num_flip = mv_flip = 0
    for _ in range(30):
        model = random_model(rng, max_horizon=2)
        red = reduce_with_numeraire(model)
        tree = model.tree
        p = random_premium(rng, tree)
        for c in _boundary_claims(rng, model, 3):
            num_flip += membership(model, c).member != red.membership(c).member
            num_err = max(num_err, abs(superhedge_cost(model, c, p).value - red.superhedge_cost(c, p).value))
    for _ in range(30):
        model = random_model(rng, max_horizon=2)
        tree = model.tree
        mv = to_market_values(model, rng.uniform(0.5, 3.0, size=(len(tree), model.dim)))
        p = random_premium(rng, tree)
        for c in _boundary_claims(rng, model, 3):
            mv_flip += membership(model, c).member != membership(mv, c).member
            mv_err = max(mv_err, abs(superhedge_cost(model, c, p).value - superhedge_cost(mv, c, p).value))
    ok = num_flip == 0 and mv_flip == 0 and num_err <= 1e-8 and mv_err <= 1e-8
    report(8, "numeraire and market-value transforms", ok,
           f"numeraire: {num_flip} flips, max |d pi| {num_err:.1e}; "
           f"market values: {mv_flip} flips, max |d pi| {mv_err:.1e}")


def test_09_closedness_implication(report):
    rng = np.random.default_rng(1009)
    qualified = failures = 0
    while qualified < 50:
        model = random_model(rng, constraints="lower")
        pos = positive_price_exists(model)
        if not (pos.exists and pos.recession_nonnegative):
            continue
        qualified += 1
        failures += not closedness_condition(model).satisfied
    arb = arbitrage_model(constrained=True)
    found = arbitrage_check(arb).found
    closed = closedness_condition(arb).satisfied
    ok = failures == 0 and found and closed
    report(9, "positive prices and D_inf in the orthant imply closedness", ok,
           f"{qualified} instances, {failures} violations; constrained arbitrage model: "
           f"arbitrage={found}, closedness satisfied={closed}")


def _complementarity(lp, sol):
    """Independent complementary slackness and dual-sign check for an optimal LP."""
    x, y = sol.x, sol.duals
    sgn = 1.0 if lp.maximize else -1.0
    slack = lp.A @ x - lp.b
    worst = 0.0
    for yi, si, sense in zip(y, slack, lp.senses):
        if sense != "=":
            worst = max(worst, abs(yi * si))
            # value sensitivity to b: for max, raising a <= rhs cannot hurt
            expect = sgn if sense == "<=" else -sgn
            worst = max(worst, max(-expect * yi, 0.0))
    r = lp.c - lp.A.T @ y
    for j in range(lp.num_vars):
        dist = min(abs(x[j] - lp.lb[j]), abs(x[j] - lp.ub[j]))
        if abs(r[j]) > 1e-9:
            worst = max(worst, abs(r[j]) * dist)
    return worst


def test_10_lp_kernel(report):
    rng = np.random.default_rng(1010)
    agree, worst_val, worst_cs, counts = 0, 0.0, 0.0, {}
    for _ in range(500):
        lp = random_lp(rng)
        status, value = oracle(lp)
        sol = solve(lp)
        counts[status] = counts.get(status, 0) + 1
        agree += sol.status.value == status
        if status == "optimal" and sol.status is Status.OPTIMAL:
            worst_val = max(worst_val, abs(sol.value - value))
            worst_cs = max(worst_cs, _complementarity(lp, sol))
    ok = agree == 500 and worst_val <= 1e-8 and worst_cs <= 1e-8
    report(10, "LP kernel vs vertex enumeration on 500 LPs", ok,
           f"status agreement {agree}/500 {counts}, max value err {worst_val:.1e}, "
           f"max complementarity {worst_cs:.1e}")
