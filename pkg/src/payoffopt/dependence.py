"""Benchmarks and the uniform dependence coordinate Z.

A dependence constraint couples the payoff to a benchmark A_T through a
copula C.  All constructions run through the uniform coordinate

    U = F_{S_T | A_T}(S_T),      Z = C^{-1}_{1|A_T}(U),

which is uniform on (0, 1); (Z, A_T) has copula C.  Everything here is
computed on the probit scale w = Phi^{-1}(Z) for numerical stability: for
market benchmarks both Phi^{-1}(U) and Phi^{-1}(F_A(A_T)) are affine in log
prices, so w never round-trips through saturating probabilities.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import norm

from .copulas import CopulaSpec
from .market import MarketParams, conditional_law, geometric_average_joint, pair_joint_sT_st

__all__ = [
    "Benchmark",
    "terminal_benchmark",
    "intermediate_benchmark",
    "geometric_benchmark",
    "external_benchmark",
    "ZMap",
    "z_transform",
    "admissible_rho_interval",
    "check_admissible_rho",
    "effective_corr_horizon",
]


@dataclass(frozen=True)
class Benchmark:
    """Benchmark asset A_T for a dependence constraint.

    kind:
      - "terminal":     A_T = S_T (no joint density with itself; only the
                        Frechet copula kinds are meaningful).
      - "intermediate": A_T = S_t for a date t in (0, T).
      - "geometric":    A_T = G_T, the geometric average.
      - "external":     user-supplied benchmark; requires the conditional cdf
                        F_{S_T|A}(s, a) and the marginal cdf F_A(a).
    """

    kind: str
    t: float | None = None
    cond_cdf_s_given_a: Callable | None = None
    marginal_cdf: Callable | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("terminal", "intermediate", "geometric", "external"):
            raise ValueError(f"unknown benchmark kind {self.kind!r}")
        if self.kind == "intermediate" and self.t is None:
            raise ValueError("intermediate benchmark requires a date t")
        if self.kind == "external" and (
            self.cond_cdf_s_given_a is None or self.marginal_cdf is None
        ):
            raise ValueError(
                "external benchmark requires cond_cdf_s_given_a and marginal_cdf"
            )


def terminal_benchmark() -> Benchmark:
    return Benchmark(kind="terminal")


def intermediate_benchmark(t: float) -> Benchmark:
    return Benchmark(kind="intermediate", t=t)


def geometric_benchmark() -> Benchmark:
    return Benchmark(kind="geometric")


def external_benchmark(cond_cdf_s_given_a, marginal_cdf) -> Benchmark:
    return Benchmark(
        kind="external", cond_cdf_s_given_a=cond_cdf_s_given_a, marginal_cdf=marginal_cdf
    )


def admissible_rho_interval(t: float, t_mat: float) -> tuple[float, float]:
    """Admissible Gaussian correlations for an S_t benchmark: [-sqrt(1-t/T), 1).

    Below the left endpoint the conditional expectation of xi_T given Z
    loses the monotonicity that the explicit solutions rely on.
    """
    if not 0 < t < t_mat:
        raise ValueError(f"t must be in (0, T={t_mat}), got {t}")
    return (-np.sqrt(1.0 - t / t_mat), 1.0)


def check_admissible_rho(copula: CopulaSpec, benchmark: Benchmark, params: MarketParams) -> None:
    """Reject Gaussian rho outside the admissible range for an S_t benchmark."""
    if copula.kind != "gaussian" or benchmark.kind != "intermediate":
        return
    lo, hi = admissible_rho_interval(benchmark.t, params.t_mat)
    if not lo <= copula.rho < hi:
        raise ValueError(
            f"rho={copula.rho} outside the admissible range [{lo:.6f}, 1) "
            f"for a benchmark at t={benchmark.t}"
        )


@dataclass(frozen=True)
class ZMap:
    """Probit-scale evaluation of the dependence coordinate Z.

    ``w_fn`` maps the observations (prices at ``times`` in ascending order,
    then the geometric average when ``uses_average``) to w = Phi^{-1}(Z).
    """

    times: tuple[float, ...]
    uses_average: bool
    w_fn: Callable[..., np.ndarray]

    def w(self, *obs) -> np.ndarray:
        return self.w_fn(*obs)

    def z(self, *obs) -> np.ndarray:
        return norm.cdf(self.w_fn(*obs))


def _benchmark_scores(benchmark: Benchmark, params: MarketParams):
    """Return (times, uses_average, score_a, probit_u).

    score_a(*obs) is the standardized normal score of the benchmark, so that
    F_A(A) = Phi(score_a); probit_u(*obs) = Phi^{-1}(F_{S_T|A}(S_T)).
    """
    T = params.t_mat
    if benchmark.kind == "terminal":
        sdT = params.sigma * np.sqrt(T)
        mT = np.log(params.s0) + params.log_drift(T)

        def score_a(s_T):
            return (np.log(s_T) - mT) / sdT

        return (T,), False, score_a, None

    if benchmark.kind == "intermediate":
        t = benchmark.t
        if not 0 < t < T:
            raise ValueError(f"benchmark date must be in (0, T), got {t}")
        sdt = params.sigma * np.sqrt(t)
        sdTt = params.sigma * np.sqrt(T - t)
        mt = np.log(params.s0) + params.log_drift(t)
        mTt = params.log_drift(T - t)

        def score_a(s_t, s_T):
            return (np.log(s_t) - mt) / sdt

        def probit_u(s_t, s_T):
            # ln S_T | S_t ~ N(ln S_t + (mu - sigma^2/2)(T-t), sigma^2 (T-t))
            return (np.log(s_T / s_t) - mTt) / sdTt

        return (t, T), False, score_a, probit_u

    if benchmark.kind == "geometric":
        joint = geometric_average_joint(params)

        def score_a(s_T, g):
            return (np.log(g) - joint.mean1) / joint.sd1

        def probit_u(s_T, g):
            law = conditional_law(joint, given_coord=0, given_value=np.log(g))
            return (np.log(s_T) - law.mean) / law.sd

        return (T,), True, score_a, probit_u

    # external benchmark: observations are (a, s_T) raw values
    def score_a(a, s_T):
        p = np.clip(benchmark.marginal_cdf(a), 1e-16, 1 - 1e-16)
        return norm.ppf(p)

    def probit_u(a, s_T):
        p = np.clip(benchmark.cond_cdf_s_given_a(s_T, a), 1e-16, 1 - 1e-16)
        return norm.ppf(p)

    return (), False, score_a, probit_u


def z_transform(benchmark: Benchmark, copula: CopulaSpec, params: MarketParams) -> ZMap:
    """Build the map from market observations to w = Phi^{-1}(Z).

    The terminal benchmark admits only the Frechet copula kinds, for which
    Z = F_{S_T}(S_T) (upper) or Z = 1 - F_{S_T}(S_T) (lower); with a joint
    density the general composition Z = C^{-1}_{1|F_A(A)}(F_{S_T|A}(S_T))
    applies.
    """
    check_admissible_rho(copula, benchmark, params)
    times, uses_average, score_a, probit_u = _benchmark_scores(benchmark, params)

    if benchmark.kind == "terminal":
        if copula.kind == "frechet-upper":
            return ZMap(times, uses_average, lambda s_T: score_a(s_T))
        if copula.kind == "frechet-lower":
            return ZMap(times, uses_average, lambda s_T: -score_a(s_T))
        raise ValueError(
            "the terminal benchmark S_T has no joint density with itself; "
            "only frechet-upper / frechet-lower copulas are supported"
        )

    if copula.kind == "gaussian":
        rho = copula.rho
        root = np.sqrt(1.0 - rho**2)

        def w_fn(*obs):
            return root * probit_u(*obs) + rho * score_a(*obs)

    elif copula.kind == "independence":

        def w_fn(*obs):
            return probit_u(*obs)

    elif copula.kind == "frechet-upper":

        def w_fn(*obs):
            return score_a(*obs)

    else:  # frechet-lower

        def w_fn(*obs):
            return -score_a(*obs)

    return ZMap(times, uses_average, w_fn)


def effective_corr_horizon(benchmark: Benchmark, copula: CopulaSpec,
                           params: MarketParams) -> float | None:
    """Closed-form constant c = sqrt(T) corr(score(ln S_T), Phi^{-1}(Z)).

    The probit of Z and the standardized score of ln S_T are jointly
    standard normal for every market benchmark, so the conditional
    expectation of xi_T given Z is the exponential

        E[xi_T | Z] = delta exp(-theta c Phi^{-1}(Z)),
        delta = exp(-rT - theta^2 c^2 / 2),

    with c returned here.  Returns None for external benchmarks, whose joint
    law with the market is not known to the library.
    """
    check_admissible_rho(copula, benchmark, params)
    T = params.t_mat
    if benchmark.kind == "external":
        return None
    if benchmark.kind == "terminal":
        if copula.kind == "frechet-upper":
            return float(np.sqrt(T))
        if copula.kind == "frechet-lower":
            return float(-np.sqrt(T))
        raise ValueError("terminal benchmark admits only the Frechet copula kinds")
    if benchmark.kind == "intermediate":
        t = benchmark.t
        if copula.kind == "gaussian":
            rho = copula.rho
            return float(rho * np.sqrt(t) + np.sqrt((1 - rho**2) * (T - t)))
        if copula.kind == "independence":
            return float(np.sqrt(T - t))
        if copula.kind == "frechet-upper":
            return float(np.sqrt(t))
        return float(-np.sqrt(t))
    # geometric benchmark: corr(ln S_T, ln G_T) = sqrt(3)/2
    rho_gs = np.sqrt(3.0) / 2.0
    if copula.kind == "gaussian":
        rho = copula.rho
        rho_c = rho * rho_gs + np.sqrt(1 - rho**2) * np.sqrt(1 - rho_gs**2)
    elif copula.kind == "independence":
        rho_c = np.sqrt(1 - rho_gs**2)
    elif copula.kind == "frechet-upper":
        rho_c = rho_gs
    else:
        rho_c = -rho_gs
    return float(np.sqrt(T) * rho_c)
