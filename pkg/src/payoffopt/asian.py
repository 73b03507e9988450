"""Closed-form prices for continuously monitored geometric Asian contracts.

All formulas price against the lognormal law of the geometric average

    ln G_T ~ N(ln S0 + (mu - sigma^2/2) T/2, sigma^2 T / 3),

jointly lognormal with S_T with correlation sqrt(3)/2.  Four instruments are
covered: the cost-efficient counterpart of the fixed-strike call (a power
call on S_T), the fixed-strike geometric Asian call itself, the
floating-strike put (G_T - S_T)^+, and its cheapest twin
(G_T - a G_T^3 / S_T)^+ with a = e^{(mu - sigma^2/2) T/2} / S0.

Note on reference values: the two-decimal reference constants 6.74 / 5.86
quoted for the floating-strike pair at (mu=0.06, r=0.02, sigma=0.3, T=1,
S0=100) are NOT reproduced by the exact formulas, which give 6.0088 and
5.1946 and are confirmed by independent quadrature and Monte Carlo under
both measures.  The reference constants are recovered only by flipping the
sign of the sigma^2 T / 12 exponent, so they appear to carry a sign slip;
this library returns the verified values.  See REFERENCE_FLOATING_PUT and
REFERENCE_CHEAPEST_TWIN for the constants used by the reproduction checks.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import quad
from scipy.stats import norm

from .market import MarketParams
from .payoffs import (
    PayoffFn,
    average_payoff,
    average_terminal_payoff,
    terminal_payoff,
)
from .pricing import PriceQuote

__all__ = [
    "fixed_strike_call_payoff",
    "floating_put_payoff",
    "cost_efficient_fixed_strike_payoff",
    "cost_efficient_fixed_strike_coefficient",
    "cheapest_floating_twin_payoff",
    "cheapest_floating_twin_coefficient",
    "price_cost_efficient_fixed_strike",
    "price_kemna_vorst",
    "price_floating_asian_put",
    "price_cheapest_floating_twin",
    "quad_price_kemna_vorst",
    "quad_price_floating_asian_put",
    "quad_price_cheapest_floating_twin",
    "REFERENCE_FLOATING_PUT",
    "REFERENCE_CHEAPEST_TWIN",
    "REFERENCE_TOLERANCE",
]

# Two-decimal reference constants for the floating-strike pair at
# (mu=0.06, r=0.02, sigma=0.3, T=1, S0=100); see the module docstring for
# why the exact formulas do not reproduce them.
REFERENCE_FLOATING_PUT = 6.74
REFERENCE_CHEAPEST_TWIN = 5.86
REFERENCE_TOLERANCE = 0.005


def _sig3(params: MarketParams) -> float:
    return params.sigma * np.sqrt(params.t_mat / 3.0)


# ---------------------------------------------------------------------------
# Payoffs
# ---------------------------------------------------------------------------


def fixed_strike_call_payoff(params: MarketParams, strike: float) -> PayoffFn:
    """Fixed-strike geometric Asian call (G_T - K)^+."""
    if strike < 0:
        raise ValueError("strike must be >= 0")
    return average_payoff(lambda g: np.maximum(g - strike, 0.0), params.t_mat,
                          label=f"geo-asian-fixed(K={strike})")


def floating_put_payoff(params: MarketParams) -> PayoffFn:
    """Floating-strike geometric Asian put (G_T - S_T)^+."""
    return average_terminal_payoff(lambda s_T, g: np.maximum(g - s_T, 0.0),
                                   params.t_mat, label="geo-asian-floating-put")


def cost_efficient_fixed_strike_coefficient(params: MarketParams) -> float:
    """Coefficient d = S0^{1 - 1/sqrt(3)} e^{(1/2 - 1/sqrt(3)) (mu - sigma^2/2) T}."""
    isq3 = 1.0 / np.sqrt(3.0)
    return float(params.s0 ** (1.0 - isq3)
                 * np.exp((0.5 - isq3) * params.log_drift(params.t_mat)))


def cost_efficient_fixed_strike_payoff(params: MarketParams, strike: float) -> PayoffFn:
    """Cost-efficient counterpart of the fixed-strike call: d (S_T^{1/sqrt 3} - K/d)^+.

    A power call on S_T with the same payoff distribution as (G_T - K)^+;
    K -> 0 gives the cost-efficient equivalent of the geometric average.
    """
    if strike < 0:
        raise ValueError("strike must be >= 0")
    d = cost_efficient_fixed_strike_coefficient(params)
    isq3 = 1.0 / np.sqrt(3.0)
    return terminal_payoff(lambda s: np.maximum(d * s**isq3 - strike, 0.0),
                           params.t_mat, label=f"power-call(K={strike})")


def cheapest_floating_twin_coefficient(params: MarketParams) -> float:
    """Coefficient a = e^{(mu - sigma^2/2) T / 2} / S0 of the cheapest floating twin."""
    return float(np.exp(0.5 * params.log_drift(params.t_mat)) / params.s0)


def cheapest_floating_twin_payoff(params: MarketParams) -> PayoffFn:
    """Cheapest twin of the floating-strike put: (G_T - a G_T^3 / S_T)^+.

    Same joint distribution with G_T as (G_T - S_T)^+, but conditionally
    increasing in S_T given G_T, hence strictly cheaper when mu > r.
    """
    a = cheapest_floating_twin_coefficient(params)
    return average_terminal_payoff(lambda s_T, g: np.maximum(g - a * g**3 / s_T, 0.0),
                                   params.t_mat, label="cheapest-floating-twin")


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def price_cost_efficient_fixed_strike(params: MarketParams, strike: float) -> PriceQuote:
    """Price of the power call d (S_T^{1/sqrt 3} - K/d)^+.

        S0 e^{(1/sqrt3 - 1) rT + (1/2 - 1/sqrt3) mu T - sigma^2 T/12} Phi(h1)
            - K e^{-rT} Phi(h2),
        h1 = [ln(S0/K) + (1/2 - 1/sqrt3) mu T + rT/sqrt3 + sigma^2 T/12]
             / (sigma sqrt(T/3)),
        h2 = h1 - sigma sqrt(T/3).
    """
    if strike < 0:
        raise ValueError("strike must be >= 0")
    S0, r, mu, T = params.s0, params.r, params.mu, params.t_mat
    sig2T = params.sigma**2 * T
    isq3 = 1.0 / np.sqrt(3.0)
    lead = S0 * np.exp((isq3 - 1.0) * r * T + (0.5 - isq3) * mu * T - sig2T / 12.0)
    if strike == 0:
        return PriceQuote(float(lead), "closed-form", formula_id="power-call")
    h1 = (np.log(S0 / strike) + (0.5 - isq3) * mu * T + r * T * isq3 + sig2T / 12.0) / _sig3(params)
    h2 = h1 - _sig3(params)
    value = lead * norm.cdf(h1) - strike * np.exp(-r * T) * norm.cdf(h2)
    return PriceQuote(float(value), "closed-form", formula_id="power-call")


def price_kemna_vorst(params: MarketParams, strike: float) -> PriceQuote:
    """Price of the fixed-strike geometric Asian call (G_T - K)^+.

        S0 e^{-rT/2 - sigma^2 T/12} Phi(d1) - K e^{-rT} Phi(d2),
        d1 = [ln(S0/K) + rT/2 + sigma^2 T/12] / (sigma sqrt(T/3)),
        d2 = d1 - sigma sqrt(T/3).

    Also the price of the twin call (R_T(t) - K)^+ for every t, since the
    twin shares the joint law with S_T.
    """
    if strike < 0:
        raise ValueError("strike must be >= 0")
    S0, r, T = params.s0, params.r, params.t_mat
    sig2T = params.sigma**2 * T
    lead = S0 * np.exp(-0.5 * r * T - sig2T / 12.0)
    if strike == 0:
        return PriceQuote(float(lead), "closed-form", formula_id="geo-asian-fixed")
    d1 = (np.log(S0 / strike) + 0.5 * r * T + sig2T / 12.0) / _sig3(params)
    d2 = d1 - _sig3(params)
    value = lead * norm.cdf(d1) - strike * np.exp(-r * T) * norm.cdf(d2)
    return PriceQuote(float(value), "closed-form", formula_id="geo-asian-fixed")


def price_floating_asian_put(params: MarketParams) -> PriceQuote:
    """Price of the floating-strike geometric Asian put (G_T - S_T)^+.

        S0 e^{-rT/2} (Phi(f) e^{-sigma^2 T/12} - e^{rT/2} Phi(f - sigma sqrt(T/3))),
        f = (sigma^2 T/12 - rT/2) / (sigma sqrt(T/3)).

    Risk neutral: the value does not involve mu.
    """
    S0, r, T = params.s0, params.r, params.t_mat
    sig2T = params.sigma**2 * T
    f = (sig2T / 12.0 - 0.5 * r * T) / _sig3(params)
    value = S0 * np.exp(-0.5 * r * T) * (
        norm.cdf(f) * np.exp(-sig2T / 12.0)
        - np.exp(0.5 * r * T) * norm.cdf(f - _sig3(params))
    )
    return PriceQuote(float(value), "closed-form", formula_id="floating-put")


def price_cheapest_floating_twin(params: MarketParams) -> PriceQuote:
    """Price of the cheapest floating twin (G_T - a G_T^3 / S_T)^+.

        S0 e^{-rT/2} (Phi(d) e^{-sigma^2 T/12} - e^{mu T/2} Phi(d - sigma sqrt(T/3))),
        d = (sigma^2 T/12 - mu T/2) / (sigma sqrt(T/3)).

    Coincides with the floating-strike put price at mu = r and is strictly
    smaller when mu > r.
    """
    S0, r, mu, T = params.s0, params.r, params.mu, params.t_mat
    sig2T = params.sigma**2 * T
    d = (sig2T / 12.0 - 0.5 * mu * T) / _sig3(params)
    value = S0 * np.exp(-0.5 * r * T) * (
        norm.cdf(d) * np.exp(-sig2T / 12.0)
        - np.exp(0.5 * mu * T) * norm.cdf(d - _sig3(params))
    )
    return PriceQuote(float(value), "closed-form", formula_id="cheapest-floating-twin")


# ---------------------------------------------------------------------------
# Deterministic quadrature oracles (1-D reductions by conditioning)
# ---------------------------------------------------------------------------


def quad_price_kemna_vorst(params: MarketParams, strike: float) -> PriceQuote:
    """Quadrature of e^{-rT} E_Q[(G_T - K)^+] against the law of ln G_T."""
    if strike < 0:
        raise ValueError("strike must be >= 0")
    r, T = params.r, params.t_mat
    m = np.log(params.s0) + 0.5 * (r - 0.5 * params.sigma**2) * T
    sd = _sig3(params)

    def integrand(w):
        return np.maximum(np.exp(m + sd * w) - strike, 0.0) * norm.pdf(w)

    kink = (np.log(strike) - m) / sd if strike > 0 else None
    pts = [kink] if kink is not None and -12 < kink < 12 else None
    value, err = quad(integrand, -12, 12, points=pts, limit=200)
    return PriceQuote(float(np.exp(-r * T) * value), "quadrature",
                      stderr=float(np.exp(-r * T) * err), formula_id="geo-asian-fixed")


def _quad_exchange(params: MarketParams, z_mean: float, lead_exp: float,
                   c_factor: float, formula_id: str) -> PriceQuote:
    """Common 1-D reduction e^{-rT} S0 E[(e^{a + z/2} - c e^{a + 3z/2})^+].

    Both floating-strike prices condition the payoff on the lognormal spread
    coordinate z (variance sigma^2 T / 3 under Q) and integrate the analytic
    inner conditional expectation.
    """
    r, T = params.r, params.t_mat
    sd = _sig3(params)

    def integrand(z):
        return (np.exp(lead_exp + 0.5 * z) - c_factor * np.exp(lead_exp + 1.5 * z)) \
            * norm.pdf((z - z_mean) / sd) / sd

    z_cut = -np.log(c_factor)  # payoff positive iff z < -ln(c)
    lo, hi = z_mean - 12 * sd, min(z_cut, z_mean + 12 * sd)
    if hi <= lo:
        return PriceQuote(0.0, "quadrature", stderr=1e-300, formula_id=formula_id)
    value, err = quad(integrand, lo, hi, limit=200)
    scale = params.s0 * np.exp(-r * T)
    return PriceQuote(float(scale * value), "quadrature",
                      stderr=float(max(scale * err, 1e-300)), formula_id=formula_id)


def quad_price_floating_asian_put(params: MarketParams) -> PriceQuote:
    """Quadrature of e^{-rT} E_Q[(G_T - S_T)^+] via the spread coordinate."""
    r, T = params.r, params.t_mat
    return _quad_exchange(params, z_mean=(r - 0.5 * params.sigma**2) * 0.5 * T,
                          lead_exp=0.25 * r * T, c_factor=1.0, formula_id="floating-put")


def quad_price_cheapest_floating_twin(params: MarketParams) -> PriceQuote:
    """Quadrature of e^{-rT} E_Q[(G_T - a G_T^3/S_T)^+] via the spread coordinate."""
    r, T = params.r, params.t_mat
    c = np.exp(0.5 * params.log_drift(T))
    return _quad_exchange(params, z_mean=0.0,
                          lead_exp=0.5 * r * T - params.sigma**2 * T / 8.0,
                          c_factor=float(c), formula_id="cheapest-floating-twin")
