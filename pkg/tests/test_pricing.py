import numpy as np
import pytest

from payoffopt.market import MarketParams, terminal_log_law
from payoffopt.pricing import (
    PriceQuote,
    bs_call_price,
    bs_put_price,
    gh_price_two_point,
    grid_price_terminal,
    quad_price_terminal,
    xi_weighted_power_tail,
)


def test_quote_invariants():
    q = bs_call_price(MarketParams(0.06, 0.02, 0.3, 100, 1.0), 100.0)
    assert q.method == "closed-form" and q.stderr == 0.0
    with pytest.raises(ValueError):
        PriceQuote(1.0, "closed-form", stderr=0.1)
    with pytest.raises(ValueError):
        PriceQuote(1.0, "guesswork")


def test_black_scholes_put_call_parity(params):
    K = 104.0
    call = bs_call_price(params, K).value
    put = bs_put_price(params, K).value
    forward = params.s0 - K * np.exp(-params.r * params.t_mat)
    assert call - put == pytest.approx(forward, abs=1e-10)


def test_quadrature_matches_closed_forms(params):
    for K in (80.0, 100.0, 125.0):
        q = quad_price_terminal(lambda s: np.maximum(s - K, 0.0), params, kinks=(K,))
        assert q.method == "quadrature" and q.stderr > 0
        assert q.value == pytest.approx(bs_call_price(params, K).value, abs=1e-9)
        qp = quad_price_terminal(lambda s: np.maximum(K - s, 0.0), params, kinks=(K,))
        assert qp.value == pytest.approx(bs_put_price(params, K).value, abs=1e-9)


def test_grid_price_agrees_with_quadrature(params):
    fn = lambda s: np.sqrt(s)
    a = grid_price_terminal(fn, params, n=20001)
    b = quad_price_terminal(fn, params).value
    assert a == pytest.approx(b, rel=1e-8)


def test_power_tail_closed_form(params):
    # E[xi S^c 1{S > x}] against adaptive quadrature
    for c, x in ((0.0, 90.0), (-1.0, 120.0), (0.7, 0.0)):
        closed = xi_weighted_power_tail(params, c, x)
        q = quad_price_terminal(lambda s: s**c * (s > x), params, kinks=(x,) if x > 0 else ())
        assert closed == pytest.approx(q.value, rel=1e-8)
    # bond normalization: c = 0, no barrier
    assert xi_weighted_power_tail(params, 0.0, 0.0) == pytest.approx(
        np.exp(-params.r * params.t_mat), rel=1e-12)


def test_gh_two_point_prices_forward(params):
    # E[xi_T S_T] = S0 and E[xi_T S_t] = S0 e^{-r(T-t)}
    q = gh_price_two_point(lambda s_t, s_T: s_T, params, t=0.5)
    assert q.value == pytest.approx(params.s0, rel=1e-10)
    q2 = gh_price_two_point(lambda s_t, s_T: s_t, params, t=0.5)
    assert q2.value == pytest.approx(params.s0 * np.exp(-params.r * 0.5), rel=1e-10)


def test_terminal_log_law(params):
    law = terminal_log_law(params)
    assert law.mean == pytest.approx(np.log(100.0) + 0.015)
    assert law.sd == pytest.approx(0.3)
