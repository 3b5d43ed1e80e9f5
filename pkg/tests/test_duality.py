import numpy as np
import pytest

from superhedge.duality import (attainment_certificate, attainment_slacks, bipolar_separation, dual_price,
                                extract_deflator, martingale_residual, multipliers, polar_membership,
                                support_function_C1, support_function_direct, verify_certificate)
from superhedge.errors import ConicalOnly, UndefinedBase
from superhedge.hedging import membership, superhedge_cost
from superhedge.instances import (arbitrage_model, bid_ask_model, binomial_model, counterexample_outer,
                                  random_claim, random_model, random_premium, root_premium,
                                  two_period_bid_ask)
from superhedge.market import MarketModel, PolyhedralConstraint, cost_from_ladder
from superhedge.tree import build_tree, pairing, uniform_tree

P0 = np.array([1.0, 0.0, 0.0])
CALL = np.array([0.0, 3.0, 0.0])
Y_BIN = np.array([1.0, 2 / 3, 4 / 3])


def ladder_model():
    tree = build_tree([("0", None, 1.0), ("u", "0", 0.5), ("d", "0", 0.5)])
    costs = [cost_from_ladder([[(1.0, None)], [(2.0, 1.0), (2.5, 2.0)]], [[(1.0, None)], [(1.5, 1.0), (1.0, 3.0)]]),
             cost_from_ladder([[(1.0, None)], [(3.0, 2.0)]], [[(1.0, None)], [(2.5, 2.0)]]),
             cost_from_ladder([[(1.0, None)], [(1.0, 1.0), (1.2, None)]], [[(1.0, None)], [(0.6, None)]])]
    return MarketModel(tree, costs, assets=["cash", "stock"])


def test_support_at_zero():
    for model in (binomial_model(), ladder_model(), counterexample_outer()):
        value, v = support_function_C1(model, np.zeros(len(model.tree)))
        assert value == 0.0
        np.testing.assert_allclose(v, 0.0)


def test_support_linear_model():
    model = binomial_model()
    assert support_function_C1(model, Y_BIN)[0] == pytest.approx(0.0, abs=1e-12)
    assert support_function_C1(model, [1.0, 1.0, 1.0])[0] == np.inf
    assert support_function_C1(model, [1.0, 2.0, -0.5])[0] == np.inf


def test_support_matches_direct_on_ladder_model():
    model = ladder_model()
    rng = np.random.default_rng(1)
    for _ in range(20):
        y = rng.uniform(0.0, 2.0, size=3)
        a, b = support_function_C1(model, y)[0], support_function_direct(model, y)
        assert np.isinf(a) == np.isinf(b)
        if np.isfinite(a):
            assert a == pytest.approx(b, rel=1e-6, abs=1e-6)


@pytest.mark.parametrize("seed", range(10))
def test_support_matches_direct_on_random_models(seed):
    rng = np.random.default_rng(300 + seed)
    model = random_model(rng)
    p = random_premium(rng, model.tree)
    cert = extract_deflator(model, random_claim(rng, model.tree), p)
    for y in (cert.y, cert.y * (1 + 0.2 * rng.uniform(size=cert.y.size)), 2 * cert.y):
        a, b = support_function_C1(model, y)[0], support_function_direct(model, y)
        assert np.isinf(a) == np.isinf(b)
        if np.isfinite(a):
            assert a == pytest.approx(b, rel=1e-6, abs=1e-6)


def test_support_is_sublinear():
    model = ladder_model()
    rng = np.random.default_rng(2)
    for _ in range(10):
        y1, y2 = rng.uniform(0.0, 2.0, size=(2, 3))
        s1, s2 = support_function_C1(model, y1)[0], support_function_C1(model, y2)[0]
        s12 = support_function_C1(model, y1 + y2)[0]
        assert s1 >= 0 and s12 <= s1 + s2 + 1e-9
        assert support_function_C1(model, 3 * y1)[0] == pytest.approx(3 * s1, rel=1e-9, abs=1e-9)


def test_binomial_deflator():
    cert = extract_deflator(binomial_model(), CALL, P0)
    np.testing.assert_allclose(cert.y, Y_BIN, atol=1e-10)
    assert cert.value == pytest.approx(1.0, abs=1e-10)
    assert cert.sigma == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(cert.s, [[1.0, 4.0], [1.0, 8.0], [1.0, 2.0]], atol=1e-10)
    assert verify_certificate(binomial_model(), CALL, P0, cert.y, 1.0)
    assert not verify_certificate(binomial_model(), CALL, P0, [1.0, 1.0, 1.0], 1.0)


@pytest.mark.parametrize("alpha", [-2.0, 0.0, 0.7, 5.0])
def test_translation_certificate(alpha):
    model = bid_ask_model()
    cert = extract_deflator(model, alpha * P0, P0)
    assert cert.value == pytest.approx(alpha, abs=1e-9)
    assert cert.sigma == pytest.approx(0.0, abs=1e-12)
    assert pairing(model.tree, P0, cert.y) == pytest.approx(1.0, abs=1e-12)


def test_bid_ask_prices_in_intervals():
    model = bid_ask_model()
    quotes = [(1.0, 2.0), (2.5, 3.0), (0.5, 0.8)]
    for c in ([0.0, 1.0, 0.0], [0.0, -1.0, 2.0], [0.0, 3.0, 0.0]):
        cert = extract_deflator(model, c, P0, verify_dual=True)
        assert np.all(cert.y >= 0)
        for k, (bid, ask) in enumerate(quotes):
            assert cert.s[k, 0] == pytest.approx(1.0, abs=1e-9)
            assert bid - 1e-9 <= cert.s[k, 1] <= ask + 1e-9


def test_deflator_needs_finite_price():
    with pytest.raises(UndefinedBase):
        extract_deflator(arbitrage_model(False), [0.0, 0.0], [1.0, 0.0])


def test_dual_price_matches_primal():
    model = ladder_model()
    rng = np.random.default_rng(3)
    for _ in range(10):
        c = rng.normal(size=3)
        assert dual_price(model, c, P0)[0] == pytest.approx(superhedge_cost(model, c, P0).value, abs=1e-8)


def test_multipliers_read_off_pricing_lp():
    res = superhedge_cost(binomial_model(), CALL, P0)
    y, v, sigma = multipliers(res)
    np.testing.assert_allclose(y, Y_BIN, atol=1e-10)
    assert sigma == pytest.approx(0.0, abs=1e-12)


# polar membership ---------------------------------------------------------

def interval_oracle(model, quotes, y):
    """Backward interval propagation: feasible stock prices per node given y."""
    tree = model.tree
    if np.any(y < 0):
        return False
    feasible = {}
    for k in reversed(range(len(tree))):
        bid, ask = quotes[tree.ids[k]]
        kids = tree.children[k]
        if not len(kids):
            feasible[k] = (bid, ask)
            continue
        w = tree.prob[kids] / tree.prob[k]
        if abs(w @ y[kids] - y[k]) > 1e-12:
            return False
        if y[k] == 0:
            lo, hi = bid, ask
        else:
            lo = sum(wi * y[m] * feasible[m][0] for wi, m in zip(w, kids)) / y[k]
            hi = sum(wi * y[m] * feasible[m][1] for wi, m in zip(w, kids)) / y[k]
            lo, hi = max(lo, bid), min(hi, ask)
        if lo > hi + 1e-12:
            return False
        feasible[k] = (lo, hi)
    return True


def cash_martingale(rng, tree, spread):
    y = np.ones(len(tree))
    for k in tree.nonterminal:
        kids = tree.children[k]
        e = rng.uniform(-spread, spread, size=len(kids))
        e -= e.mean()
        y[kids] = y[k] * (1 + e)
    return np.maximum(y, 0.0)


def test_polar_membership_two_period_bid_ask():
    tree = uniform_tree(2, 2)
    quotes = dict(zip(tree.ids, [(9.0, 11.0), (11.0, 13.0), (7.0, 9.0), (13.0, 15.0), (10.0, 12.0),
                                 (9.0, 10.0), (5.0, 7.0)]))
    model = two_period_bid_ask(quotes)
    rng = np.random.default_rng(4)
    seen = set()
    for _ in range(60):
        y = cash_martingale(rng, model.tree, rng.choice([0.1, 0.5, 0.9]))
        expect = interval_oracle(model, quotes, y)
        res = polar_membership(model, y)
        assert res.member == expect
        assert (support_function_C1(model, y)[0] == 0.0) == expect
        seen.add(expect)
    assert seen == {True, False}
    assert polar_membership(model, np.zeros(7)).member


def test_polar_membership_linear():
    model = binomial_model()
    assert polar_membership(model, Y_BIN).member
    assert not polar_membership(model, [1.0, 1.0, 1.0]).member
    with pytest.raises(ConicalOnly):
        polar_membership(ladder_model(), Y_BIN)


@pytest.mark.parametrize("seed", range(4))
def test_conical_support_is_zero_or_infinite(seed):
    rng = np.random.default_rng(400 + seed)
    model = random_model(rng, max_horizon=2, conical=True)
    p = root_premium(model.tree)
    y0 = extract_deflator(model, random_claim(rng, model.tree), p).y
    for y in (y0, y0 * rng.uniform(0.5, 1.5, size=y0.size)):
        sigma = support_function_C1(model, y)[0]
        assert sigma == 0.0 or np.isinf(sigma)
        assert polar_membership(model, y).member == (sigma <= 0.0)


def test_martingale_residual():
    cert = extract_deflator(binomial_model(), CALL, P0)
    rep = martingale_residual(binomial_model(), cert.y, cert.s)
    assert rep.max == pytest.approx(0.0, abs=1e-10)

    tree = build_tree([("0", None, 1.0), ("u", "0", 0.5), ("d", "0", 0.5)])
    drift = MarketModel.linear(tree, [[1.0, 1.0], [1.0, 2.5], [1.0, 1.5]])
    s = np.array([[1.0, 1.0], [1.0, 2.5], [1.0, 1.5]])
    rep = martingale_residual(drift, np.ones(3), s)
    assert rep.per_node[0] == pytest.approx(1.0, abs=1e-12)


def test_martingale_residual_inside_polar():
    # D = R x R_+^2, so the polar is {0} x R_-^2
    tree = build_tree([("0", None, 1.0), ("u", "0", 0.5), ("d", "0", 0.5)])
    D = PolyhedralConstraint(np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0]]), np.zeros(2), 3)
    prices = np.array([[1.0, 2.0, 3.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]])
    model = MarketModel.linear(tree, prices, constraints=[D, D, D])
    assert martingale_residual(model, np.ones(3), prices).max == pytest.approx(0.0, abs=1e-12)
    up = prices.copy()
    up[1:, 1] = 3.0
    assert martingale_residual(model, np.ones(3), up).per_node[0] == pytest.approx(1.0, abs=1e-12)


# separation and attainment -------------------------------------------------

def test_separation_inside():
    model = binomial_model()
    assert bipolar_separation(model, [-1.0, 0.0, 0.0]).inside


def test_separation_below_price():
    model = binomial_model()
    sep = bipolar_separation(model, CALL - 0.9 * P0)
    assert not sep.inside
    assert sep.sigma <= 1.0 < sep.pairing
    assert np.all(sep.y >= 0)


def test_separation_large_constant():
    model = ladder_model()
    sep = bipolar_separation(model, np.full(3, 50.0))
    assert not sep.inside
    assert sep.sigma <= 1.0 + 1e-12 < sep.pairing
    assert support_function_C1(model, sep.y)[0] == pytest.approx(sep.sigma, abs=1e-9)


def test_attainment_binomial():
    model = binomial_model()
    cert = extract_deflator(model, CALL, P0)
    rng = np.random.default_rng(5)
    samples = [P0] + [-rng.uniform(size=3) for _ in range(3)] + list(rng.normal(size=(100, 3)))
    slacks = attainment_slacks(model, CALL, P0, cert.y, samples)
    assert slacks[0] == pytest.approx(0.0, abs=1e-9)
    np.testing.assert_allclose(slacks, 0.0, atol=1e-8)
    assert attainment_certificate(model, CALL, P0, cert.y, samples)


def test_attainment_fails_for_wrong_deflator():
    model = bid_ask_model()
    c = np.array([0.0, 1.0, 0.0])
    cert = extract_deflator(model, c, P0)
    wrong = np.array([1.0, 2.0, 0.0])  # q = 1 lies outside [1/11, 3/4]
    assert attainment_certificate(model, c, P0, cert.y, [c, -c, P0])
    assert not attainment_certificate(model, c, P0, wrong, [c])
