"""Target-probability maximization: digital optima, random targets, benchmarks.

For a fixed target b > W0 e^{rT} the budget-constrained maximizer of
P[X_T >= b] is the digital

    X* = b 1{S_T > lam},   lam = S0 exp((r - sigma^2/2) T - sigma sqrt(T) q),
    q = Phi^{-1}(W0 e^{rT} / b),

with success probability Phi(theta sqrt(T) + q).  Two extensions keep the
all-or-nothing structure: a random target B gives X* = B 1{B xi_T < lam}
with lam calibrated on the empirical law of B xi_T, and a copula constraint
with a benchmark gives the digital in the uniform coordinate Z,
X* = b 1{Z > lam_z}, whose threshold is closed form for market benchmarks:

    lam_z = Phi(-theta c - q),  success = Phi(theta c + q),

where c is the effective correlation horizon of (benchmark, copula); the
unconstrained problem is the case c = sqrt(T).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from . import mc
from .copulas import CopulaSpec
from .dependence import Benchmark, ZMap, effective_corr_horizon, z_transform
from .market import MarketParams, state_price_density
from .payoffs import PayoffFn, terminal_payoff, two_point_payoff

__all__ = [
    "TargetProblem",
    "TrivialTargetError",
    "DigitalOptimum",
    "browne_optimum",
    "RandomTargetOptimum",
    "random_target_optimum",
    "ConstrainedDigitalOptimum",
    "benchmark_constrained_optimum",
    "expected_payoff_unconstrained",
    "expected_payoff_constrained",
    "figure2_curve",
]


class TrivialTargetError(ValueError):
    """The risk-free investment already beats the target with probability one."""


@dataclass(frozen=True)
class TargetProblem:
    """Target-probability problem: budget, target, optional dependence constraint."""

    w0: float
    b: float | None = None
    target_payoff: PayoffFn | None = None
    benchmark: Benchmark | None = None
    copula: CopulaSpec | None = None

    def __post_init__(self) -> None:
        if not self.w0 > 0:
            raise ValueError("w0 must be > 0")
        if (self.b is None) == (self.target_payoff is None):
            raise ValueError("specify exactly one of a fixed target b or a target payoff")
        if (self.benchmark is None) != (self.copula is None):
            raise ValueError("a dependence constraint needs both a benchmark and a copula")


def _funding_quantile(params: MarketParams, w0: float, b: float) -> float:
    """q = Phi^{-1}(W0 e^{rT} / b); raises when the target is trivially reachable."""
    ratio = w0 * np.exp(params.r * params.t_mat) / b
    if ratio >= 1:
        raise TrivialTargetError(
            f"target b={b} is no more than the risk-free proceeds "
            f"{w0 * np.exp(params.r * params.t_mat):.6f}; invest risk-free instead"
        )
    return float(norm.ppf(ratio))


@dataclass(frozen=True)
class DigitalOptimum:
    """Digital payoff b 1{S_T > threshold} with its success probability."""

    payoff: PayoffFn
    threshold: float
    success_prob: float


def browne_optimum(problem: TargetProblem, params: MarketParams) -> DigitalOptimum:
    """Optimal payoff for a fixed target without a dependence constraint."""
    if problem.b is None or problem.benchmark is not None:
        raise ValueError("browne_optimum solves the fixed-target unconstrained problem")
    b, w0 = problem.b, problem.w0
    q = _funding_quantile(params, w0, b)
    T = params.t_mat
    lam = params.s0 * np.exp((params.r - 0.5 * params.sigma**2) * T
                             - params.sigma * np.sqrt(T) * q)
    success = float(norm.cdf(params.theta * np.sqrt(T) + q))
    payoff = terminal_payoff(lambda s: b * (s > lam).astype(float), T,
                             label=f"digital(b={b},lam={lam:.6g})")
    return DigitalOptimum(payoff=payoff, threshold=float(lam), success_prob=success)


@dataclass(frozen=True)
class RandomTargetOptimum:
    """All-or-nothing payoff B 1{B xi_T < lam} for a random target B."""

    payoff: PayoffFn
    lam: float
    fully_funded: bool
    target_price: float
    success_prob: float


def random_target_optimum(problem: TargetProblem, params: MarketParams,
                          config: mc.SimConfig | None = None) -> RandomTargetOptimum:
    """Maximize P[X_T >= B] for a nonnegative random target payoff B.

    lam solves E[B xi_T 1{B xi_T < lam}] = W0 on the empirical law of
    B xi_T over the simulated sample; when W0 already funds B in full the
    target itself is returned with ``fully_funded`` set.
    """
    if problem.target_payoff is None:
        raise ValueError("random_target_optimum needs a target payoff")
    B = problem.target_payoff
    if config is None:
        config = mc.SimConfig(n_paths=1 << 20, seed=1201, steps_per_year=252)
    table = mc.simulate(config, params, times=B.times, want_average=B.uses_average)
    b_vals = mc.evaluate_payoff(B, table)
    if np.any(b_vals < 0):
        raise ValueError("target payoff must be nonnegative")
    v = b_vals * table.xi
    price_b = float(v.mean())
    T = params.t_mat

    if problem.w0 >= price_b:
        success = 1.0
        return RandomTargetOptimum(payoff=B, lam=float(np.inf), fully_funded=True,
                                   target_price=price_b, success_prob=success)

    v_sorted = np.sort(v)
    cum = np.cumsum(v_sorted) / v.size
    k = int(np.searchsorted(cum, problem.w0, side="left"))
    lam = float(v_sorted[min(k, v.size - 1)])
    success = float(np.mean(v < lam))

    times = tuple(sorted(set(B.times) | {T}))

    def fn(*obs):
        s_T = obs[len(times) - 1]  # T is the largest observation time
        b_here = B.fn(*_pick(obs, times, B))
        xi = state_price_density(params, s_T, T)
        return b_here * (b_here * xi < lam)

    payoff = PayoffFn(times=times, fn=fn, uses_average=B.uses_average,
                      label=f"random-target-digital(lam={lam:.6g})")
    return RandomTargetOptimum(payoff=payoff, lam=lam, fully_funded=False,
                               target_price=price_b, success_prob=success)


def _pick(obs, times, payoff: PayoffFn):
    """Select the observation arrays the wrapped payoff expects."""
    chosen = [obs[times.index(t)] for t in payoff.times]
    if payoff.uses_average:
        chosen.append(obs[-1])
    return chosen


@dataclass(frozen=True)
class ConstrainedDigitalOptimum:
    """Digital in the dependence coordinate: b 1{Z > z_threshold}."""

    payoff: PayoffFn
    z_threshold: float
    w_threshold: float
    success_prob: float
    expected_payoff: float
    zmap: ZMap = field(repr=False)
    alpha: float | None = None
    price_threshold: float | None = None


def benchmark_constrained_optimum(problem: TargetProblem,
                                  params: MarketParams) -> ConstrainedDigitalOptimum:
    """Fixed-target optimum under a copula constraint with a benchmark.

    The optimum is b 1{Z_T > lam_z} with b E[xi_T 1{Z_T > lam_z}] = W0; for
    market benchmarks the threshold is lam_z = Phi(-theta c - q) in closed
    form.  With the intermediate benchmark S_t and a Gaussian copula the
    digital is explicit in prices: b 1{S_t^alpha S_T > price_threshold} with
    alpha = sqrt((T-t)/(t(1-rho^2))) rho - 1.

    The copula constraint is carried by the construction coordinate Z (which
    has copula C with the benchmark); the two-valued payoff itself cannot
    carry a continuous copula.
    """
    if problem.b is None or problem.benchmark is None:
        raise ValueError("benchmark_constrained_optimum needs a fixed target and a constraint")
    b, w0 = problem.b, problem.w0
    benchmark, copula = problem.benchmark, problem.copula
    q = _funding_quantile(params, w0, b)
    zmap = z_transform(benchmark, copula, params)
    c = effective_corr_horizon(benchmark, copula, params)
    if c is None:
        raise ValueError("external benchmarks lack the closed-form threshold; "
                         "supply the conditional laws and solve on your own pairs")
    theta = params.theta
    w_threshold = float(-theta * c - q)
    lam_z = float(norm.cdf(w_threshold))
    success = float(norm.cdf(theta * c + q))
    expected = b * success

    def fn(*obs):
        return b * (zmap.w_fn(*obs) > w_threshold).astype(float)

    if zmap.uses_average:
        payoff = PayoffFn(times=zmap.times, fn=fn, uses_average=True,
                          label="constrained-digital")
    elif len(zmap.times) == 2:
        payoff = two_point_payoff(fn, zmap.times[0], zmap.times[1],
                                  label="constrained-digital")
    else:
        payoff = terminal_payoff(fn, zmap.times[0], label="constrained-digital")

    alpha = price_threshold = None
    if benchmark.kind == "intermediate" and copula.kind == "gaussian":
        t, rho, T = benchmark.t, copula.rho, params.t_mat
        alpha = float(np.sqrt((T - t) / (t * (1.0 - rho**2))) * rho - 1.0)
        k = (T - t) / (1.0 - rho**2)
        price_threshold = float(
            params.s0 ** (alpha + 1.0)
            * np.exp((params.r - 0.5 * params.sigma**2) * (alpha * t + T)
                     - params.sigma * np.sqrt(k) * q)
        )
    return ConstrainedDigitalOptimum(payoff=payoff, z_threshold=lam_z,
                                     w_threshold=w_threshold, success_prob=success,
                                     expected_payoff=float(expected), zmap=zmap,
                                     alpha=alpha, price_threshold=price_threshold)


def expected_payoff_unconstrained(params: MarketParams, w0: float, b: float) -> float:
    """E[b 1{S_T > lam}] = b Phi(theta sqrt(T) + q) for the unconstrained digital."""
    q = _funding_quantile(params, w0, b)
    return float(b * norm.cdf(params.theta * np.sqrt(params.t_mat) + q))


def expected_payoff_constrained(params: MarketParams, w0: float, b: float,
                                t: float, rho: float) -> float:
    """E[b 1{Z > lam_z}] = b Phi(theta c + q) under the Gaussian(rho)-S_t constraint."""
    from .copulas import gaussian_copula
    from .dependence import intermediate_benchmark

    q = _funding_quantile(params, w0, b)
    c = effective_corr_horizon(intermediate_benchmark(t), gaussian_copula(rho), params)
    return float(b * norm.cdf(params.theta * c + q))


def figure2_curve(params: MarketParams, w0: float, b: float, t: float,
                  rho_grid) -> np.ndarray:
    """Rows (rho, constrained expected payoff, unconstrained expected payoff).

    The unconstrained column is flat in rho; the constrained column touches
    it exactly at rho = sqrt(t/T).
    """
    rho_grid = np.asarray(rho_grid, dtype=float)
    if rho_grid.size == 0:
        raise ValueError("rho_grid must be non-empty")
    flat = expected_payoff_unconstrained(params, w0, b)
    rows = [(rho, expected_payoff_constrained(params, w0, b, t, rho), flat)
            for rho in rho_grid]
    return np.asarray(rows, dtype=float)
