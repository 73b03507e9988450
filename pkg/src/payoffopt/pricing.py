"""Deterministic pricing: closed forms and quadrature against the lognormal law.

Every price is E[xi_T X_T].  For terminal payoffs f(S_T) this is the 1-D
integral of f(s) g_T(s) against the lognormal density, computed either with
adaptive quadrature (with kink locations passed through) or on a fixed
trapezoidal grid in the standardized log coordinate, which is the
deterministic workhorse behind root-finding on payoff families.

The quote records which method produced the number.  ``stderr`` holds the
numerical uncertainty: exactly 0 for closed forms, an error estimate for
quadrature, the standard error for Monte Carlo.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.stats import norm

from .market import MarketParams, terminal_log_law

__all__ = [
    "PriceQuote",
    "bs_call_price",
    "bs_put_price",
    "xi_weighted_power_tail",
    "quad_price_terminal",
    "grid_price_terminal",
    "gh_price_two_point",
]


@dataclass(frozen=True)
class PriceQuote:
    """A price plus the method and formula that produced it."""

    value: float
    method: str  # "closed-form" | "quadrature" | "monte-carlo"
    stderr: float = 0.0
    formula_id: str = ""

    def __post_init__(self) -> None:
        if self.method not in ("closed-form", "quadrature", "monte-carlo"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "closed-form" and self.stderr != 0.0:
            raise ValueError("closed-form quotes carry no uncertainty")


def bs_call_price(params: MarketParams, strike: float) -> PriceQuote:
    """Black-Scholes call price (risk-neutral valuation of (S_T - K)^+)."""
    if strike < 0:
        raise ValueError("strike must be >= 0")
    S0, r, sigma, T = params.s0, params.r, params.sigma, params.t_mat
    if strike == 0:
        return PriceQuote(S0, "closed-form", formula_id="bs-call")
    d1 = (np.log(S0 / strike) + (r + 0.5 * sigma**2) * T) / (sigma * np.sqrt(T))
    d2 = d1 - sigma * np.sqrt(T)
    value = S0 * norm.cdf(d1) - strike * np.exp(-r * T) * norm.cdf(d2)
    return PriceQuote(float(value), "closed-form", formula_id="bs-call")


def bs_put_price(params: MarketParams, strike: float) -> PriceQuote:
    """Black-Scholes put price."""
    if strike < 0:
        raise ValueError("strike must be >= 0")
    S0, r, sigma, T = params.s0, params.r, params.sigma, params.t_mat
    if strike == 0:
        return PriceQuote(0.0, "closed-form", formula_id="bs-put")
    d1 = (np.log(S0 / strike) + (r + 0.5 * sigma**2) * T) / (sigma * np.sqrt(T))
    d2 = d1 - sigma * np.sqrt(T)
    value = strike * np.exp(-r * T) * norm.cdf(-d2) - S0 * norm.cdf(-d1)
    return PriceQuote(float(value), "closed-form", formula_id="bs-put")


def xi_weighted_power_tail(params: MarketParams, power: float, barrier: float) -> float:
    """Closed form for E[xi_T S_T^c 1{S_T > x}].

    With ln S_T ~ N(M, V) and xi_T = alpha_T S0^beta S_T^{-beta},

        E[xi_T S_T^c 1{S_T > x}]
            = alpha_T S0^beta e^{(c-b)M + (c-b)^2 V/2}
              Phi((M + (c-b)V - ln x) / sqrt(V)),  b = beta.

    ``barrier`` <= 0 means no barrier (full expectation).
    """
    law = terminal_log_law(params)
    M, V = law.mean, law.sd**2
    cb = power - params.beta
    lead = params.alpha(params.t_mat) * params.s0**params.beta * np.exp(cb * M + 0.5 * cb**2 * V)
    if barrier <= 0:
        return float(lead)
    tail = norm.cdf((M + cb * V - np.log(barrier)) / np.sqrt(V))
    return float(lead * tail)


def quad_price_terminal(fn, params: MarketParams, kinks=(), formula_id: str = "") -> PriceQuote:
    """Adaptive quadrature of E[xi_T f(S_T)] over the standardized log coordinate.

    ``kinks`` are price levels where f is non-smooth; they are mapped to the
    integration variable so the adaptive rule subdivides there.
    """
    law = terminal_log_law(params)
    M, sd = law.mean, law.sd
    alpha_T, beta, s0 = params.alpha(params.t_mat), params.beta, params.s0

    def integrand(w):
        s = np.exp(M + sd * w)
        return alpha_T * (s / s0) ** (-beta) * fn(s) * norm.pdf(w)

    points = sorted((np.log(k) - M) / sd for k in kinks if k > 0)
    points = [p for p in points if -12 < p < 12]
    value, err = quad(integrand, -12.0, 12.0, points=points or None, limit=400)
    return PriceQuote(float(value), "quadrature", stderr=float(err), formula_id=formula_id)


def grid_price_terminal(fn, params: MarketParams, n: int = 10001, w_max: float = 10.0) -> float:
    """Deterministic trapezoidal price of E[xi_T f(S_T)] on a fixed log grid.

    Robust to kinks and plateaus in f, which makes it the pricing backend for
    root-finding over payoff families (monotone, no adaptive-noise floor).
    """
    law = terminal_log_law(params)
    w = np.linspace(-w_max, w_max, n)
    s = np.exp(law.mean + law.sd * w)
    xi = params.alpha(params.t_mat) * (s / params.s0) ** (-params.beta)
    vals = xi * np.asarray(fn(s), dtype=float) * norm.pdf(w)
    return float(np.trapezoid(vals, w))


def gh_price_two_point(fn, params: MarketParams, t: float, n: int = 201,
                       formula_id: str = "") -> PriceQuote:
    """Gauss-Hermite quadrature of E[xi_T f(S_t, S_T)] for smooth payoffs.

    Decomposes (ln S_t, ln S_T) into independent shocks over [0, t] and
    [t, T].  Accuracy degrades on kinked payoffs; use Monte Carlo there.
    """
    if not 0 < t < params.t_mat:
        raise ValueError(f"t must be in (0, T={params.t_mat}), got {t}")
    nodes, weights = np.polynomial.hermite_e.hermegauss(n)
    weights = weights / np.sqrt(2.0 * np.pi)
    T = params.t_mat
    ln_s0 = np.log(params.s0)
    w1, w2 = np.meshgrid(nodes, nodes, indexing="ij")
    ww = np.outer(weights, weights)
    ln_st = ln_s0 + params.log_drift(t) + params.sigma * np.sqrt(t) * w1
    ln_sT = ln_st + params.log_drift(T - t) + params.sigma * np.sqrt(T - t) * w2
    s_t, s_T = np.exp(ln_st), np.exp(ln_sT)
    xi = params.alpha(T) * (s_T / params.s0) ** (-params.beta)
    vals = xi * np.asarray(fn(s_t, s_T), dtype=float) * ww
    value = float(vals.sum())
    # error proxy: difference against the half-resolution rule
    nodes_h, weights_h = np.polynomial.hermite_e.hermegauss(max(11, n // 2))
    weights_h = weights_h / np.sqrt(2.0 * np.pi)
    w1h, w2h = np.meshgrid(nodes_h, nodes_h, indexing="ij")
    wwh = np.outer(weights_h, weights_h)
    ln_sth = ln_s0 + params.log_drift(t) + params.sigma * np.sqrt(t) * w1h
    ln_sTh = ln_sth + params.log_drift(T - t) + params.sigma * np.sqrt(T - t) * w2h
    xih = params.alpha(T) * (np.exp(ln_sTh) / params.s0) ** (-params.beta)
    value_h = float((xih * np.asarray(fn(np.exp(ln_sth), np.exp(ln_sTh)), dtype=float) * wwh).sum())
    err = max(abs(value - value_h), 1e-15 * max(abs(value), 1.0))
    return PriceQuote(value, "quadrature", stderr=err, formula_id=formula_id)
