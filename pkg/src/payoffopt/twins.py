"""Twins: payoffs on two market observations with a prescribed joint law.

A twin couples the payoff to a benchmark A_T by fixing the joint
distribution of (X_T, A_T).  Constructions run through the conditional
quantile F^{-1}_{X|A} and the market's conditional laws:

  - benchmark S_T (which has no density with itself): pick any intermediate
    date t and set  f(S_t, S_T) = F^{-1}_{X|S_T}(F_{S_t|S_T}(S_t));
    every such twin has the same price, for any t and either orientation.
  - benchmark A_T with a joint density with S_T: the cheapest payoff with
    the given joint law is  X* = F^{-1}_{X|A}(F_{S_T|A}(S_T)),  increasing
    in S_T conditionally on A_T; flipping the uniform gives the most
    expensive twin, and a one-parameter family interpolates every price in
    between.

The geometric-Asian family is carried in closed form: the twin of the
geometric average is log-linear in (S_t, S_T) and the cheapest twin of the
floating-strike put is (G_T - a G_T^3 / S_T)^+ with a = e^{(mu-sigma^2/2)T/2}/S0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.stats import kendalltau, norm

from . import mc
from .dependence import Benchmark, geometric_benchmark, intermediate_benchmark, terminal_benchmark
from .market import (
    MarketParams,
    cdf_sT,
    conditional_law,
    geometric_average_joint,
    pair_joint_sT_st,
    quantile_sT,
)
from .payoffs import PayoffFn, average_terminal_payoff, two_point_payoff

__all__ = [
    "JointSpec",
    "ExternalTwin",
    "fixed_strike_asian_joint",
    "geometric_average_joint_spec",
    "floating_put_terminal_joint",
    "floating_put_geometric_joint",
    "joint_from_samples",
    "twin_with_sT_benchmark",
    "cheapest_twin",
    "most_expensive_twin",
    "twin_at_price",
    "TwinAtPrice",
    "LogLinearTwin",
    "asian_twin_exponents",
    "best_twin_by_correlation",
    "CorrelationScan",
    "is_cheapest_twin",
    "conditional_monotonicity_report",
    "ConditionalMonotonicityReport",
]

_P_EPS = 1e-15


@dataclass(frozen=True)
class JointSpec:
    """Target joint law of (X_T, A_T), given by the conditional quantile.

    ``cond_quantile(a, p)`` evaluates F^{-1}_{X_T | A_T = a}(p), vectorized
    and nondecreasing in p for every a.  ``benchmark`` fixes which market
    conditional law supplies the uniform coordinate.
    """

    benchmark: Benchmark
    cond_quantile: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False)
    family: str = "custom"


# ---------------------------------------------------------------------------
# Analytic joint specifications for the geometric-Asian family
# ---------------------------------------------------------------------------


def fixed_strike_asian_joint(params: MarketParams, strike: float) -> JointSpec:
    """Joint law of ((G_T - K)^+, S_T): conditional quantile of the call on G.

    ln G_T | ln S_T is normal with mean ln sqrt(S0 S_T) and variance
    sigma^2 T / 12; K = 0 gives the geometric average itself.
    """
    if strike < 0:
        raise ValueError("strike must be >= 0")
    joint = geometric_average_joint(params)
    cond_sd = np.sqrt(1.0 - joint.rho**2) * joint.sd1  # sigma sqrt(T/12)

    def cond_quantile(s_T, p):
        mean = 0.5 * (np.log(params.s0) + np.log(s_T))
        g_q = np.exp(mean + cond_sd * norm.ppf(p))
        return np.maximum(g_q - strike, 0.0)

    family = "geometric-average" if strike == 0 else "fixed-strike-asian"
    return JointSpec(benchmark=terminal_benchmark(), cond_quantile=cond_quantile, family=family)


def geometric_average_joint_spec(params: MarketParams) -> JointSpec:
    """Joint law of (G_T, S_T)."""
    return fixed_strike_asian_joint(params, 0.0)


def floating_put_terminal_joint(params: MarketParams) -> JointSpec:
    """Joint law of ((G_T - S_T)^+, S_T)."""
    joint = geometric_average_joint(params)
    cond_sd = np.sqrt(1.0 - joint.rho**2) * joint.sd1

    def cond_quantile(s_T, p):
        mean = 0.5 * (np.log(params.s0) + np.log(s_T))
        return np.maximum(np.exp(mean + cond_sd * norm.ppf(p)) - s_T, 0.0)

    return JointSpec(benchmark=terminal_benchmark(), cond_quantile=cond_quantile,
                     family="floating-put")


def floating_put_geometric_joint(params: MarketParams) -> JointSpec:
    """Joint law of ((G_T - S_T)^+, G_T), benchmark the geometric average.

    ln S_T | ln G_T is normal with mean ln(G^{3/2}/sqrt(S0)) + (mu-sigma^2/2)T/4
    and variance sigma^2 T / 4, which yields

        F^{-1}_{X|G}(p) = (G - (G^{3/2}/sqrt(S0))
                            e^{(mu-sigma^2/2)T/4 - (sigma sqrt(T)/2) Phi^{-1}(p)})^+.
    """
    T = params.t_mat
    half_sd = 0.5 * params.sigma * np.sqrt(T)
    shift = 0.25 * params.log_drift(T)

    def cond_quantile(g, p):
        strike_leg = g**1.5 / np.sqrt(params.s0) * np.exp(shift - half_sd * norm.ppf(p))
        return np.maximum(g - strike_leg, 0.0)

    return JointSpec(benchmark=geometric_benchmark(), cond_quantile=cond_quantile,
                     family="floating-put-geometric")


def joint_from_samples(x_samples, a_samples, benchmark: Benchmark,
                       n_bins: int = 100, n_knots: int = 1000) -> JointSpec:
    """Empirical conditional quantile from (X, A) samples.

    Bins the benchmark into ``n_bins`` equal-probability buckets and stores
    ``n_knots`` empirical quantiles of X per bucket; lookup is piecewise
    constant in a (bucket resolution) and linear in p.
    """
    x = np.asarray(x_samples, dtype=float).ravel()
    a = np.asarray(a_samples, dtype=float).ravel()
    if x.size != a.size or x.size < n_bins * 10:
        raise ValueError("need matching samples, at least 10 per benchmark bucket")
    edges = np.quantile(a, np.linspace(0, 1, n_bins + 1)[1:-1])
    knots = (np.arange(n_knots) + 0.5) / n_knots
    bin_idx = np.searchsorted(edges, a, side="right")
    q_table = np.empty((n_bins, n_knots))
    for b in range(n_bins):
        xb = x[bin_idx == b]
        if xb.size == 0:
            raise ValueError(f"empty benchmark bucket {b}; too many ties in a_samples")
        q_table[b] = np.quantile(xb, knots)

    def cond_quantile(a_val, p):
        a_val = np.asarray(a_val, dtype=float)
        p = np.asarray(p, dtype=float)
        a_val, p = np.broadcast_arrays(a_val, p)
        bins = np.searchsorted(edges, a_val.ravel(), side="right")
        out = np.empty(bins.size)
        pr = p.ravel()
        for b in np.unique(bins):
            mask = bins == b
            out[mask] = np.interp(pr[mask], knots, q_table[b])
        return out.reshape(p.shape)

    return JointSpec(benchmark=benchmark, cond_quantile=cond_quantile, family="empirical")


# ---------------------------------------------------------------------------
# Constructions
# ---------------------------------------------------------------------------


def twin_with_sT_benchmark(joint: JointSpec, t: float, params: MarketParams,
                           orientation: str = "increasing") -> PayoffFn:
    """Twin f(S_t, S_T) with the prescribed joint law with S_T.

    Uses the uniform U = F_{S_t|S_T}(S_t) (independent of S_T), or 1 - U for
    the decreasing orientation.  The date t is free in (0, T); all choices
    give the same price.
    """
    if joint.benchmark.kind != "terminal":
        raise ValueError("twin_with_sT_benchmark needs a joint law with benchmark S_T")
    if orientation not in ("increasing", "decreasing"):
        raise ValueError("orientation must be 'increasing' or 'decreasing'")
    T = params.t_mat
    if not 0 < t < T:
        raise ValueError(f"t must be in (0, T={T}), got {t}")
    cond_sd = params.sigma * np.sqrt(t * (T - t) / T)
    ratio = t / T

    def fn(s_t, s_T):
        score = (np.log(s_t / params.s0) - ratio * np.log(s_T / params.s0)) / cond_sd
        u = norm.cdf(score)
        if orientation == "decreasing":
            u = 1.0 - u
        return joint.cond_quantile(s_T, np.clip(u, _P_EPS, 1 - _P_EPS))

    return two_point_payoff(fn, t, T, label=f"twin(t={t:g},{orientation})")


def _cond_cdf_sT_given_benchmark(benchmark: Benchmark, params: MarketParams):
    """F_{S_T|A}(s, a) for market benchmarks, or the user-supplied callable."""
    if benchmark.kind == "intermediate":
        t = benchmark.t
        law_sd = params.sigma * np.sqrt(params.t_mat - t)
        drift = params.log_drift(params.t_mat - t)

        def cond_cdf(s_T, a):
            return norm.cdf((np.log(s_T / a) - drift) / law_sd)

        return cond_cdf
    if benchmark.kind == "geometric":
        joint = geometric_average_joint(params)

        def cond_cdf(s_T, a):
            law = conditional_law(joint, given_coord=0, given_value=np.log(a))
            return norm.cdf((np.log(s_T) - law.mean) / law.sd)

        return cond_cdf
    if benchmark.kind == "external":
        return benchmark.cond_cdf_s_given_a
    raise ValueError(
        "the terminal benchmark S_T has no joint density with S_T; "
        "use twin_with_sT_benchmark instead"
    )


@dataclass(frozen=True)
class ExternalTwin:
    """Twin for an external benchmark, evaluated on (a, s_T) pairs."""

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    label: str = ""

    def __call__(self, a, s_T):
        return self.fn(np.asarray(a, dtype=float), np.asarray(s_T, dtype=float))


def _benchmark_twin(joint: JointSpec, params: MarketParams, flip: bool):
    cond_cdf = _cond_cdf_sT_given_benchmark(joint.benchmark, params)

    def core(a, s_T):
        u = np.clip(cond_cdf(s_T, a), _P_EPS, 1 - _P_EPS)
        if flip:
            u = 1.0 - u
        return joint.cond_quantile(a, u)

    tag = "most-expensive-twin" if flip else "cheapest-twin"
    if joint.benchmark.kind == "intermediate":
        return two_point_payoff(lambda s_t, s_T: core(s_t, s_T),
                                joint.benchmark.t, params.t_mat, label=tag)
    if joint.benchmark.kind == "geometric":
        return average_terminal_payoff(lambda s_T, g: core(g, s_T),
                                       params.t_mat, label=tag)
    return ExternalTwin(fn=core, label=tag)


def cheapest_twin(joint: JointSpec, params: MarketParams):
    """Cheapest payoff with the prescribed joint law with the benchmark.

    X* = F^{-1}_{X|A}(F_{S_T|A}(S_T)), increasing in S_T conditionally on
    A_T.  Requires a benchmark with a joint density with S_T (intermediate
    date, geometric average, or external with supplied laws).
    """
    return _benchmark_twin(joint, params, flip=False)


def most_expensive_twin(joint: JointSpec, params: MarketParams):
    """Orientation-flipped construction: the dearest twin with the same joint law."""
    return _benchmark_twin(joint, params, flip=True)


@dataclass(frozen=True)
class TwinAtPrice:
    """Price-matched twin plus the family parameter and the achieved price."""

    payoff: PayoffFn
    u_a: float
    price: mc.MCEstimate


def twin_at_price(joint: JointSpec, price: float, params: MarketParams,
                  config: mc.SimConfig | None = None) -> TwinAtPrice:
    """Twin with the prescribed joint law and a requested price.

    Interpolates between the cheapest and the most expensive twins through
    the family g_a(S_T) = (1-U) 1{U<=u_a} + (U-u_a) 1{U>u_a}, U = F_{S_T}(S_T),
    whose price is continuous in u_a.  The root is found on a common-random-
    numbers Monte Carlo price, so the match carries the returned standard
    error.
    """
    if joint.benchmark.kind == "external":
        raise ValueError("twin_at_price requires a simulatable market benchmark")
    if config is None:
        config = mc.SimConfig(n_paths=200_000, seed=1105, steps_per_year=252)
    cond_cdf = _cond_cdf_sT_given_benchmark(joint.benchmark, params)

    def cond_cdf_u(q, a):
        # F_{U|A}(q; a) with U = F_{S_T}(S_T)
        q = np.clip(q, 0.0, 1.0)
        out = np.empty(np.broadcast(q, a).shape)
        q, a_b = np.broadcast_arrays(q, a)
        inner = (q > 0) & (q < 1)
        out[q <= 0] = 0.0
        out[q >= 1] = 1.0
        if inner.any():
            s = quantile_sT(params, q[inner])
            out[inner] = cond_cdf(s, a_b[inner])
        return out

    def rank_of(u, a, u_a):
        g = np.where(u <= u_a, 1.0 - u, u - u_a)
        term1 = np.clip(cond_cdf_u(u_a, a) - cond_cdf_u(1.0 - g, a), 0.0, None)
        term2 = np.clip(cond_cdf_u(np.minimum(u_a + g, 1.0), a) - cond_cdf_u(u_a, a), 0.0, None)
        return np.clip(term1 + term2, _P_EPS, 1 - _P_EPS)

    want_avg = joint.benchmark.kind == "geometric"
    times = (joint.benchmark.t,) if joint.benchmark.kind == "intermediate" else ()
    table = mc.simulate(config, params, times=times, want_average=want_avg)
    a_samp = table.g if want_avg else table.s[joint.benchmark.t]
    s_T = table.s_terminal
    u_samp = np.clip(cdf_sT(params, s_T), _P_EPS, 1 - _P_EPS)

    def mc_price(u_a: float) -> float:
        x = joint.cond_quantile(a_samp, rank_of(u_samp, a_samp, u_a))
        return float(np.mean(table.xi * x))

    p_lo, p_hi = mc_price(0.0), mc_price(1.0)
    band = 3.0 * np.std(table.xi * joint.cond_quantile(a_samp, rank_of(u_samp, a_samp, 0.0))) \
        / np.sqrt(config.n_paths)
    if not p_lo - band <= price <= p_hi + band:
        from .cost_efficiency import PriceNotAttainableError

        raise PriceNotAttainableError(price, p_lo, p_hi)
    if price <= p_lo:
        u_star = 0.0
    elif price >= p_hi:
        u_star = 1.0
    else:
        u_star = float(brentq(lambda u: mc_price(u) - price, 0.0, 1.0, xtol=1e-10))

    def core(a, s_T_val):
        u = np.clip(cdf_sT(params, s_T_val), _P_EPS, 1 - _P_EPS)
        return joint.cond_quantile(a, rank_of(u, a, u_star))

    if joint.benchmark.kind == "intermediate":
        payoff = two_point_payoff(lambda s_t, s_T_val: core(s_t, s_T_val),
                                  joint.benchmark.t, params.t_mat,
                                  label=f"price-matched-twin(u_a={u_star:.6g})")
    else:
        payoff = average_terminal_payoff(lambda s_T_val, g: core(g, s_T_val),
                                         params.t_mat,
                                         label=f"price-matched-twin(u_a={u_star:.6g})")
    x_star = joint.cond_quantile(a_samp, rank_of(u_samp, a_samp, u_star))
    est = mc.estimate_mean(table.xi * x_star, config)
    return TwinAtPrice(payoff=payoff, u_a=u_star, price=est)


# ---------------------------------------------------------------------------
# The log-linear geometric-Asian twin and the correlation criterion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogLinearTwin:
    """Twin of the form coef * S_t^exp_st * S_T^exp_sT (exponent-triple export)."""

    coef: float
    exp_st: float
    exp_sT: float
    t: float

    def payoff(self, t_mat: float) -> PayoffFn:
        return two_point_payoff(
            lambda s_t, s_T: self.coef * s_t**self.exp_st * s_T**self.exp_sT,
            self.t, t_mat, label=f"log-linear-twin(t={self.t:g})",
        )

    def as_triple(self) -> tuple[float, float, float]:
        return (self.coef, self.exp_st, self.exp_sT)


def asian_twin_exponents(params: MarketParams, t: float,
                         orientation: str = "increasing") -> LogLinearTwin:
    """Closed-form twin of the geometric average G_T at date t.

    Increasing orientation:

        S0^{1/2 - k sqrt((T-t)/t)} S_t^{(T/t) k sqrt(t/(T-t))} S_T^{1/2 - k sqrt(t/(T-t))},

    with k = 1/(2 sqrt(3)); the decreasing orientation flips the signs of the
    k-terms and of the S_t exponent.
    """
    T = params.t_mat
    if not 0 < t < T:
        raise ValueError(f"t must be in (0, T={T}), got {t}")
    k = 1.0 / (2.0 * np.sqrt(3.0))
    b = (T / t) * k * np.sqrt(t / (T - t))
    c = 0.5 - k * np.sqrt(t / (T - t))
    a = 0.5 - k * np.sqrt((T - t) / t)
    if orientation == "decreasing":
        a = 0.5 + k * np.sqrt((T - t) / t)
        b = -b
        c = 0.5 + k * np.sqrt(t / (T - t))
    elif orientation != "increasing":
        raise ValueError("orientation must be 'increasing' or 'decreasing'")
    return LogLinearTwin(coef=float(params.s0**a), exp_st=float(b), exp_sT=float(c), t=t)


def asian_twin_correlation(params: MarketParams, t) -> np.ndarray | float:
    """Closed-form corr(ln twin(t), ln G_T) = 3/4 + sqrt(3) sqrt((T-t) t) / (4 T)."""
    t = np.asarray(t, dtype=float)
    T = params.t_mat
    if np.any((t <= 0) | (t >= T)):
        raise ValueError("t must lie in (0, T)")
    out = 0.75 + np.sqrt(3.0) * np.sqrt((T - t) * t) / (4.0 * T)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CorrelationScan:
    """Correlation of each candidate twin with the reference payoff."""

    t_star: float
    rho_star: float
    t_grid: np.ndarray
    rho: np.ndarray
    method: str


def best_twin_by_correlation(joint: JointSpec, reference: PayoffFn | None, t_grid,
                             params: MarketParams, method: str = "auto",
                             config: mc.SimConfig | None = None) -> CorrelationScan:
    """Pick the twin date t maximizing corr(ln twin(t), ln reference).

    Fixing the joint law with S_T fixes the price for every t, so the
    correlation with the original contract is the natural tie-breaker; for
    the geometric-average family the curve is closed form and the maximum
    sits at t = T/2.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise ValueError("t_grid must be non-empty")
    if np.any((t_grid <= 0) | (t_grid >= params.t_mat)):
        raise ValueError("t_grid must lie inside (0, T)")
    if method == "auto":
        method = "closed-form" if joint.family == "geometric-average" else "mc"
    if method == "closed-form":
        if joint.family != "geometric-average":
            raise ValueError("closed-form correlation applies to the geometric-average twin only")
        rho = asian_twin_correlation(params, t_grid)
    elif method == "mc":
        if reference is None:
            raise ValueError("the mc method needs a reference payoff")
        if config is None:
            config = mc.SimConfig(n_paths=100_000, seed=733, steps_per_year=252)
        times = tuple(sorted(set(t_grid) | set(reference.times)))
        table = mc.simulate(config, params, times=times,
                            want_average=reference.uses_average or True)
        ref_vals = mc.evaluate_payoff(reference, table)
        if np.any(ref_vals <= 0):
            raise ValueError("log-correlation needs strictly positive reference values")
        ln_ref = np.log(ref_vals)
        rho = np.empty(t_grid.size)
        for i, t in enumerate(t_grid):
            twin = twin_with_sT_benchmark(joint, t, params)
            vals = mc.evaluate_payoff(twin, table)
            if np.any(vals <= 0):
                raise ValueError("log-correlation needs strictly positive twin values")
            rho[i] = np.corrcoef(np.log(vals), ln_ref)[0, 1]
    else:
        raise ValueError("method must be 'auto', 'closed-form' or 'mc'")
    best = int(np.argmax(rho))
    return CorrelationScan(t_star=float(t_grid[best]), rho_star=float(rho[best]),
                           t_grid=t_grid, rho=np.asarray(rho, dtype=float), method=method)


# ---------------------------------------------------------------------------
# Conditional-monotonicity certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionalMonotonicityReport:
    """Binned diagnostic of 'increasing in S_T conditionally on A_T'."""

    conditionally_increasing: bool
    violations: np.ndarray  # discordant pair counts per benchmark bucket
    pairs_per_bucket: np.ndarray
    discordant_fraction: float


def conditional_monotonicity_report(s_T, a, x, n_buckets: int = 50,
                                    max_discordant_fraction: float = 0.10,
                                    ) -> ConditionalMonotonicityReport:
    """Bucket by A-quantile and count Kendall discordant (S_T, X) pairs.

    Exact evaluations with constant A within buckets give zero discordant
    pairs for a conditionally increasing payoff; sampled pairs tolerate up to
    ``max_discordant_fraction`` discordance from benchmark dispersion inside
    buckets.
    """
    s_T = np.asarray(s_T, dtype=float).ravel()
    a = np.asarray(a, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    if not s_T.size == a.size == x.size:
        raise ValueError("s_T, a, x must have equal length")
    order = np.argsort(a, kind="stable")
    chunks = np.array_split(order, n_buckets)
    violations = np.zeros(n_buckets, dtype=np.int64)
    pairs = np.zeros(n_buckets, dtype=np.int64)
    for b, idx in enumerate(chunks):
        if idx.size < 2:
            continue
        n_b = idx.size
        total = n_b * (n_b - 1) // 2
        tau = kendalltau(s_T[idx], x[idx]).statistic
        if np.isnan(tau):  # constant payoff within the bucket
            tau = 1.0
        violations[b] = int(round(max(0.0, (1.0 - tau) / 2.0) * total))
        pairs[b] = total
    frac = float(violations.sum() / max(pairs.sum(), 1))
    return ConditionalMonotonicityReport(
        conditionally_increasing=frac <= max_discordant_fraction,
        violations=violations,
        pairs_per_bucket=pairs,
        discordant_fraction=frac,
    )


def is_cheapest_twin(payoff: PayoffFn, benchmark: Benchmark, params: MarketParams,
                     n_paths: int = 100_000, seed: int = 929, n_buckets: int = 50,
                     max_discordant_fraction: float = 0.10,
                     ) -> ConditionalMonotonicityReport:
    """Certify conditional monotonicity of a payoff against a market benchmark.

    A payoff with the prescribed joint law is the cheapest twin exactly when
    it is almost surely increasing in S_T conditionally on A_T; this runs the
    binned diagnostic on simulated (S_T, A_T) pairs.
    """
    if benchmark.kind == "external":
        raise ValueError("external benchmarks cannot be simulated; "
                         "use conditional_monotonicity_report on your own pairs")
    if benchmark.kind == "terminal":
        raise ValueError("conditional monotonicity given S_T itself is vacuous; "
                         "certify against the intermediate or geometric benchmark")
    want_avg = benchmark.kind == "geometric" or payoff.uses_average
    times = set(payoff.times)
    if benchmark.kind == "intermediate":
        times.add(benchmark.t)
    config = mc.SimConfig(n_paths=n_paths, seed=seed, steps_per_year=252)
    table = mc.simulate(config, params, times=tuple(sorted(times)), want_average=want_avg)
    values = mc.evaluate_payoff(payoff, table)
    a = table.g if benchmark.kind == "geometric" else table.s[benchmark.t]
    return conditional_monotonicity_report(table.s_terminal, a, values,
                                           n_buckets=n_buckets,
                                           max_discordant_fraction=max_discordant_fraction)
