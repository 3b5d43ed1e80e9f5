import numpy as np
import pytest

from superhedge.errors import UndefinedBase, ZeroPremium
from superhedge.hedging import (PriceStatus, arbitrage_check, budget_residual, buying_price, marginal_price,
                                membership, positive_hull_membership, premium_admissibility,
                                recession_membership, selling_price, superhedge_cost)
from superhedge.instances import (arbitrage_model, bid_ask_model, binomial_model, counterexample_inner,
                                  counterexample_outer, random_claim, random_model, random_premium,
                                  root_premium)
from superhedge.market import MarketModel
from superhedge.tree import build_tree, pairing

P0 = [1.0, 0.0, 0.0]
CALL = [0.0, 3.0, 0.0]


def replication_oracle():
    """Cash and stock holdings replicating (3, 0) from prices (1, 8), (1, 2)."""
    theta = np.linalg.solve(np.array([[1.0, 8.0], [1.0, 2.0]]), np.array([3.0, 0.0]))
    return theta, theta @ np.array([1.0, 4.0])


def test_nonpositive_claim_is_member_with_zero_portfolio():
    model = binomial_model()
    c = np.array([-1.0, 0.0, -2.0])
    assert membership(model, c).member
    assert budget_residual(model, c, np.zeros((3, 2))) <= 0.0


@pytest.mark.parametrize("delta", [0.1, 0.01, 0.001])
def test_counterexample_inner(delta):
    model = counterexample_inner(delta)
    assert not membership(model, [0.0, -1.0, 1.0]).member
    res = membership(model, [0.0, -1.0, 1.0 - 2 * delta])
    assert res.member and res.residual <= 1e-8


def test_counterexample_outer():
    model = counterexample_outer()
    assert membership(model, [0.0, -1.0, 1.0]).member
    assert not membership(model, [0.0, 0.1, 0.1]).member


def test_binomial_superhedge_against_replication():
    theta, cost = replication_oracle()
    res = superhedge_cost(binomial_model(), CALL, P0)
    assert res.status is PriceStatus.FINITE
    assert res.value == pytest.approx(cost, abs=1e-8)
    np.testing.assert_allclose(res.portfolio[0], theta, atol=1e-8)
    np.testing.assert_allclose(res.portfolio[1:], 0.0)
    assert res.residual <= 1e-8


def test_translation_and_zero():
    model = binomial_model()
    p = np.array(P0)
    assert superhedge_cost(model, np.zeros(3), p).value == pytest.approx(0.0, abs=1e-12)
    base = superhedge_cost(model, CALL, p).value
    assert superhedge_cost(model, p, p).value == pytest.approx(1.0)
    for a in (-2.0, 0.5, 3.0):
        assert superhedge_cost(model, np.array(CALL) + a * p, p).value == pytest.approx(base + a, abs=1e-10)


def test_zero_premium_rejected():
    with pytest.raises(ZeroPremium):
        superhedge_cost(binomial_model(), CALL, np.zeros(3))


def test_minus_infinity_when_premium_in_recession_cone():
    model = arbitrage_model(constrained=False)
    res = superhedge_cost(model, [0.0, 0.0], [1.0, 0.0])
    assert res.status is PriceStatus.MINUS_INFINITY
    assert "recession cone" in res.diagnosis


def test_plus_infinity_outside_domain():
    # a single asset that cannot be sold short: claims at T cannot be funded
    tree = build_tree([("0", None, 1.0), ("1", "0", 1.0)])
    from superhedge.market import PolyhedralConstraint, cost_from_ladder
    S = cost_from_ladder([[(1.0, 1.0)]], [[(1.0, 1.0)]])
    model = MarketModel(tree, [S, S])
    res = superhedge_cost(model, [0.0, 5.0], [1.0, 0.0])
    assert res.status is PriceStatus.PLUS_INFINITY


def test_recession_membership():
    model = binomial_model()
    assert recession_membership(model, [-1.0, -2.0, 0.0])
    assert recession_membership(model, np.zeros(3))
    assert not recession_membership(model, P0)


def test_positive_hull():
    model = binomial_model()
    assert not positive_hull_membership(model, np.zeros(3))
    assert not positive_hull_membership(model, P0)
    assert positive_hull_membership(model, [-1.0, -0.5, 0.0])


def test_arbitrage_examples():
    assert not arbitrage_check(counterexample_outer()).found
    free = arbitrage_check(arbitrage_model(constrained=False))
    assert free.found and free.value > 0
    assert free.portfolio[0, 1] > 0  # buys the stock
    rep = arbitrage_check(arbitrage_model(constrained=True))
    assert rep.found
    assert np.all(rep.claim >= -1e-12) and rep.claim.max() > 0
    model = arbitrage_model(constrained=True)
    assert budget_residual(model, rep.claim, rep.portfolio) <= 1e-8


def test_selling_and_buying_prices():
    model = binomial_model()
    p = np.array(P0)
    assert selling_price(model, np.zeros(3), np.zeros(3), p) == pytest.approx(0.0, abs=1e-12)
    assert buying_price(model, np.zeros(3), np.zeros(3), p) == pytest.approx(0.0, abs=1e-12)
    assert selling_price(model, CALL, 2.5 * p, p) == pytest.approx(2.5)
    assert selling_price(model, np.zeros(3), CALL, p) == pytest.approx(1.0)
    assert buying_price(model, np.zeros(3), CALL, p) == pytest.approx(1.0)


def test_undefined_base():
    model = arbitrage_model(constrained=False)
    with pytest.raises(UndefinedBase):
        selling_price(model, [0.0, 0.0], [0.0, 1.0], [1.0, 0.0])


def test_marginal_price_complete_market():
    model = binomial_model()
    p = np.array(P0)
    assert marginal_price(model, np.zeros(3), p, p) == pytest.approx(1.0, abs=1e-9)
    y = np.array([1.0, 2 / 3, 4 / 3])
    rng = np.random.default_rng(0)
    for _ in range(3):
        c = rng.normal(size=3)
        assert marginal_price(model, CALL, c, p) == pytest.approx(pairing(model.tree, c, y), abs=1e-8)


def test_marginal_price_at_a_kink():
    # deflators (1, 2q, 2(1-q)) are dual feasible iff some bid/ask selection makes
    # y s a martingale: q in [1/11, 3/4] for quotes [1,2], [2.5,3], [0.5,0.8]
    model = bid_ask_model()
    q_lo, q_hi = 1.0 / 11.0, 0.75
    c = np.array([0.0, 1.0, 0.0])
    p = np.array(P0)
    up = marginal_price(model, np.zeros(3), c, p)
    down = -marginal_price(model, np.zeros(3), -c, p)
    assert up == pytest.approx(q_hi, abs=1e-9)
    assert down == pytest.approx(q_lo, abs=1e-9)
    sell = selling_price(model, np.zeros(3), c, p)
    buy = buying_price(model, np.zeros(3), c, p)
    assert buy <= down + 1e-9 <= up + 2e-9 <= sell + 3e-9


def test_premium_admissibility():
    model = binomial_model()
    rep = premium_admissibility(model, P0)
    assert rep.admissible and rep.minus_p_in_rc and not rep.p_in_rc
    zero = premium_admissibility(model, np.zeros(3))
    assert not zero.admissible and zero.p_in_rc
    terminal = premium_admissibility(model, [0.0, 1.0, 1.0])
    assert terminal.admissible
    bad = premium_admissibility(arbitrage_model(False), [1.0, 0.0])
    assert not bad.admissible and "recession" in bad.note


# properties ---------------------------------------------------------------

def member_claims(rng, model, k=2):
    """Random members of C: random claims shifted down by their price."""
    p = root_premium(model.tree)
    out = []
    for _ in range(k):
        c = random_claim(rng, model.tree)
        res = superhedge_cost(model, c, p)
        out.append(c - res.value * p)
    return out


@pytest.mark.parametrize("seed", range(6))
def test_convexity_and_negative_orthant(seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng, max_horizon=2)
    c1, c2 = member_claims(rng, model)
    for lam in (0.25, 0.5, 0.9):
        assert membership(model, lam * c1 + (1 - lam) * c2).member
    for a in (1.0, 10.0):
        m = -rng.uniform(0.0, 1.0, size=len(model.tree))
        assert membership(model, c1 + a * m).member


@pytest.mark.parametrize("seed", range(4))
def test_conical_models_give_cones(seed):
    rng = np.random.default_rng(100 + seed)
    model = random_model(rng, max_horizon=2, conical=True)
    assert model.is_conical
    for _ in range(4):
        c = random_claim(rng, model.tree)
        base = membership(model, c).member
        for a in (0.5, 2.0):
            assert membership(model, a * c).member == base


@pytest.mark.parametrize("seed", range(6))
def test_price_properties(seed):
    rng = np.random.default_rng(200 + seed)
    model = random_model(rng, max_horizon=2)
    tree = model.tree
    p = random_premium(rng, tree)
    c1, c2 = random_claim(rng, tree), random_claim(rng, tree)
    r1, r2 = superhedge_cost(model, c1, p), superhedge_cost(model, c2, p)
    assert r1.finite and r2.finite
    assert r1.residual <= 1e-8
    mid = superhedge_cost(model, (c1 + c2) / 2, p).value
    assert mid <= (r1.value + r2.value) / 2 + 1e-7
    bigger = c1 + rng.uniform(0.0, 1.0, size=len(tree))
    assert superhedge_cost(model, bigger, p).value >= r1.value - 1e-9
    assert superhedge_cost(model, np.zeros(len(tree)), p).value <= 1e-9
