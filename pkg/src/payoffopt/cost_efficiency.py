"""Law-invariant optimal payoffs: cheapest and most expensive for a target law.

For a target cdf F the cheapest payoff with that distribution is the
quantile transform of the terminal price,

    X* = F^{-1}(F_{S_T}(S_T)),

nondecreasing in S_T; the most expensive is Z* = F^{-1}(1 - F_{S_T}(S_T)).
Any price in between is attained by the one-parameter family

    f_a(S_T) = F^{-1}[(1 - F_{S_T}(S_T)) 1{S_T <= a}
                      + (F_{S_T}(S_T) - F_{S_T}(a)) 1{S_T > a}],

whose price is continuous in a and sweeps the whole interval.  The classic
worked example is the put: the ordinary put (K - S_T)^+ is the most
expensive payoff with its distribution, and the cheapest is the power put
(K - a S_T^{-1})^+ with a = S0^2 exp(2 (mu - sigma^2/2) T).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import mc
from .distributions import Dist1D
from .market import MarketParams, cdf_sT, quantile_sT
from .payoffs import PayoffFn, terminal_payoff
from .pricing import PriceQuote, grid_price_terminal, xi_weighted_power_tail

__all__ = [
    "cost_efficient_payoff",
    "most_expensive_payoff",
    "family_payoff",
    "family_price",
    "payoff_at_price",
    "strict_improvement",
    "is_cost_efficient",
    "put_payoff_distribution",
    "power_put_coefficient",
    "power_put_payoff",
    "power_put_price",
    "PriceNotAttainableError",
    "MonotonicityReport",
    "ImprovementResult",
]

_P_EPS = 1e-15  # clamp for quantile arguments at the open endpoints


class PriceNotAttainableError(ValueError):
    """Requested price lies outside [cheapest, most expensive]."""

    def __init__(self, price: float, lo: float, hi: float):
        self.price, self.lo, self.hi = price, lo, hi
        super().__init__(
            f"price {price:.6f} not attainable; distribution admits prices in "
            f"[{lo:.6f}, {hi:.6f}]"
        )


def cost_efficient_payoff(target: Dist1D, params: MarketParams) -> PayoffFn:
    """Cheapest payoff with distribution ``target``: s -> F^{-1}(F_{S_T}(s))."""

    def fn(s):
        u = np.clip(cdf_sT(params, s), _P_EPS, 1 - _P_EPS)
        return target.ppf(u)

    return terminal_payoff(fn, params.t_mat, label="cost-efficient",
                           meta={"u_a": 0.0})


def most_expensive_payoff(target: Dist1D, params: MarketParams) -> PayoffFn:
    """Most expensive payoff with distribution ``target``: s -> F^{-1}(1 - F_{S_T}(s))."""

    def fn(s):
        u = np.clip(1.0 - cdf_sT(params, s), _P_EPS, 1 - _P_EPS)
        return target.ppf(u)

    return terminal_payoff(fn, params.t_mat, label="most-expensive",
                           meta={"u_a": 1.0})


def family_payoff(target: Dist1D, params: MarketParams, u_a: float) -> PayoffFn:
    """Member f_a of the interpolation family, parameterized by u_a = F_{S_T}(a)."""

    def fn(s):
        u = cdf_sT(params, s)
        g = np.where(u <= u_a, 1.0 - u, u - u_a)
        return target.ppf(np.clip(g, _P_EPS, 1 - _P_EPS))

    return terminal_payoff(fn, params.t_mat, label=f"price-matched(u_a={u_a:.6g})",
                           meta={"u_a": float(u_a)})


def family_price(target: Dist1D, params: MarketParams, u_a: float,
                 n: int = 4001, w_max: float = 10.0) -> float:
    """Deterministic price of the family member f_a.

    The payoff jumps at the threshold a, so the two branches are integrated
    on their own grids; the price is then a smooth function of u_a, which is
    what the root-finding needs.
    """
    from scipy.stats import norm

    from .market import terminal_log_law

    law = terminal_log_law(params)
    alpha_T, beta, s0 = params.alpha(params.t_mat), params.beta, params.s0
    w_a = float(np.clip(norm.ppf(np.clip(u_a, 1e-300, 1 - 1e-16)), -w_max, w_max))

    def segment(lo, hi, transform):
        if hi - lo <= 1e-12:
            return 0.0
        w = np.linspace(lo, hi, n)
        u = norm.cdf(w)
        s = np.exp(law.mean + law.sd * w)
        xi = alpha_T * (s / s0) ** (-beta)
        x = target.ppf(np.clip(transform(u), _P_EPS, 1 - _P_EPS))
        return float(np.trapezoid(xi * x * norm.pdf(w), w))

    below = segment(-w_max, w_a, lambda u: 1.0 - u)
    above = segment(w_a, w_max, lambda u: u - u_a)
    return below + above


def payoff_at_price(target: Dist1D, price: float, params: MarketParams,
                    tol: float | None = None) -> PayoffFn:
    """Payoff with distribution ``target`` and the requested price.

    Root-finds the family parameter a (through u_a = F_{S_T}(a) in (0, 1) for
    uniform bracketing) so the deterministic quadrature price matches
    ``price``.  Raises :class:`PriceNotAttainableError` outside the interval
    spanned by the cheapest and most expensive payoffs.
    """
    if tol is None:
        tol = 1e-6 * params.s0
    lo = family_price(target, params, 0.0)
    hi = family_price(target, params, 1.0)
    if not lo - tol <= price <= hi + tol:
        raise PriceNotAttainableError(price, lo, hi)
    if price <= lo + tol:
        return cost_efficient_payoff(target, params)
    if price >= hi - tol:
        return most_expensive_payoff(target, params)

    u_star = brentq(lambda u: family_price(target, params, u) - price,
                    1e-9, 1 - 1e-9, xtol=1e-13, rtol=8.9e-16)
    return family_payoff(target, params, float(u_star))


@dataclass(frozen=True)
class ImprovementResult:
    """Strictly improved payoff plus the diagnostics behind it."""

    payoff: PayoffFn
    input_price: float
    efficient_price: float
    cash_add_on: float


def strict_improvement(payoff: PayoffFn, params: MarketParams,
                       config: mc.SimConfig | None = None,
                       target: Dist1D | None = None) -> ImprovementResult:
    """Same-price improvement F^{-1}(F_{S_T}(S_T)) + (c - c0*) e^{rT}.

    ``c`` is the input price (grid quadrature for terminal payoffs, Monte
    Carlo otherwise) and ``c0*`` the price of the cost-efficient payoff with
    the same distribution.  The residual budget c - c0* rides in the bank
    account, so the result strictly dominates any input that is not already
    almost surely increasing in S_T.
    """
    if config is None:
        config = mc.SimConfig(n_paths=200_000, seed=411, steps_per_year=252)
    if len(payoff.times) == 1 and not payoff.uses_average:
        c = grid_price_terminal(payoff.fn, params)
        if target is None:
            table = mc.simulate(config, params, times=payoff.times)
            from .distributions import EmpiricalDist

            target = EmpiricalDist.from_samples(mc.evaluate_payoff(payoff, table))
    else:
        table = mc.simulate(config, params, times=payoff.times, want_average=payoff.uses_average)
        values = mc.evaluate_payoff(payoff, table)
        c = float(np.mean(table.xi * values))
        if target is None:
            from .distributions import EmpiricalDist

            target = EmpiricalDist.from_samples(values)
    base = cost_efficient_payoff(target, params)
    c0_star = grid_price_terminal(base.fn, params)
    add_on = (c - c0_star) * np.exp(params.r * params.t_mat)

    def fn(s):
        return base.fn(s) + add_on

    improved = terminal_payoff(fn, params.t_mat, label="strict-improvement")
    return ImprovementResult(payoff=improved, input_price=c,
                             efficient_price=c0_star, cash_add_on=float(add_on))


@dataclass(frozen=True)
class MonotonicityReport:
    """Verdict of the almost-surely-increasing-in-S_T diagnostic."""

    is_increasing: bool
    violations: int
    n: int
    max_drop: float


def is_cost_efficient(payoff: PayoffFn, params: MarketParams, n_paths: int = 100_000,
                      seed: int = 7, rel_tol: float = 1e-9) -> MonotonicityReport:
    """Check whether a payoff is (weakly) increasing in S_T on simulated pairs.

    By cost-efficiency theory this is equivalent to being the cheapest payoff
    for its own distribution.  The diagnostic sorts simulated pairs by S_T
    and counts drops beyond a tolerance scaled to the payoff range; genuinely
    path-dependent payoffs show up as violations, which is the correct
    verdict (they cannot be a.s. increasing in S_T).
    """
    config = mc.SimConfig(n_paths=n_paths, seed=seed, steps_per_year=max(
        2, int(np.ceil(2 / params.t_mat))) if not payoff.uses_average else 252)
    table = mc.simulate(config, params, times=payoff.times, want_average=payoff.uses_average)
    values = mc.evaluate_payoff(payoff, table)
    order = np.argsort(table.s_terminal, kind="stable")
    sorted_vals = values[order]
    scale = max(float(np.max(np.abs(values))), 1e-12)
    drops = np.diff(sorted_vals)
    bad = drops < -rel_tol * scale
    max_drop = float(-drops.min()) if drops.size else 0.0
    return MonotonicityReport(
        is_increasing=not bool(bad.any()),
        violations=int(bad.sum()),
        n=n_paths,
        max_drop=max(max_drop, 0.0),
    )


# ---------------------------------------------------------------------------
# The put worked example
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _PutPayoffDist(Dist1D):
    """Law of the put payoff (K - S_T)^+ under the lognormal terminal price."""

    params: MarketParams
    strike: float
    kind: str = field(default="put-payoff", init=False)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        K = self.strike
        inner = 1.0 - cdf_sT(self.params, np.maximum(K - np.minimum(x, K - 1e-300), 1e-300))
        out = np.where(x < 0, 0.0, np.where(x >= K, 1.0, inner))
        return float(out) if out.ndim == 0 else out

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        atom = 1.0 - cdf_sT(self.params, self.strike)  # P(payoff = 0)
        with np.errstate(invalid="ignore"):
            tail = self.strike - quantile_sT(self.params, np.clip(1.0 - p, _P_EPS, 1 - _P_EPS))
        out = np.where(p <= atom, 0.0, tail)
        return float(out) if out.ndim == 0 else out


def put_payoff_distribution(params: MarketParams, strike: float) -> Dist1D:
    """Distribution of the ordinary put payoff (K - S_T)^+ (atom at 0)."""
    if strike <= 0:
        raise ValueError("strike must be > 0")
    return _PutPayoffDist(params=params, strike=strike)


def power_put_coefficient(params: MarketParams) -> float:
    """Coefficient a = S0^2 exp(2 (mu - sigma^2/2) T) of the power put."""
    return float(params.s0**2 * np.exp(2.0 * params.log_drift(params.t_mat)))


def power_put_payoff(params: MarketParams, strike: float) -> PayoffFn:
    """Cheapest payoff with the put distribution: (K - a / S_T)^+."""
    a = power_put_coefficient(params)
    return terminal_payoff(lambda s: np.maximum(strike - a / s, 0.0), params.t_mat,
                           label=f"power-put(K={strike})")


def power_put_price(params: MarketParams, strike: float) -> PriceQuote:
    """Closed-form price of the power put (K - a S_T^{-1})^+.

    The payoff pays K - a/S_T on {S_T > a/K}, so the price splits into two
    xi-weighted lognormal tail moments.
    """
    if strike <= 0:
        raise ValueError("strike must be > 0")
    a = power_put_coefficient(params)
    barrier = a / strike
    value = strike * xi_weighted_power_tail(params, 0.0, barrier) \
        - a * xi_weighted_power_tail(params, -1.0, barrier)
    return PriceQuote(float(value), "closed-form", formula_id="power-put")
