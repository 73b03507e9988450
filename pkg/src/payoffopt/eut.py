"""Expected-utility optimization, with and without a dependence constraint.

The classical problem max E[u(X_T)] subject to E[xi_T X_T] = W0 is solved by

    X* = (u')^{-1}(lambda xi_T),

with lambda matching the budget.  Constraining the copula between X_T and a
benchmark A_T routes the problem through the uniform coordinate Z of the
dependence machinery: with H_T = E[xi_T | Z_T] = phi(Z_T) and phi_hat the
L2[0,1] projection of phi onto the nonincreasing cone,

    X_hat = (u')^{-1}(lambda phi_hat(Z_T)),

increasing in Z_T, with lambda from E[xi_T X_hat] = int_0^1 phi(z) k(z) dz = W0.
For every market benchmark phi is the exponential
delta exp(-theta c Phi^{-1}(z)) in closed form; otherwise it is estimated by
bin-averaging xi_T against Z_T on simulated pairs, and the projection absorbs
the bin noise.

All quadrature runs on the probit scale w = Phi^{-1}(z): a uniform z-grid
cannot represent the integrable tail mass of phi, so the projection knots
combine a uniform z-grid with Gaussian-tail knots out to |w| = 7.5.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from . import mc
from .copulas import CopulaSpec
from .dependence import (
    Benchmark,
    ZMap,
    admissible_rho_interval,
    effective_corr_horizon,
    z_transform,
)
from .isotonic import IsotonicFit, isotonic_project
from .market import MarketParams, state_price_density
from .payoffs import PayoffFn, terminal_payoff, two_point_payoff

__all__ = [
    "UtilitySpec",
    "crra_utility",
    "custom_utility",
    "BudgetNotAttainableError",
    "MertonOptimum",
    "merton_optimum",
    "ConstrainedOptimum",
    "constrained_eut_optimum",
    "conditional_expectation_xi_given_z",
    "expected_utility",
    "merton_crra_payoff",
    "constrained_crra_payoff",
    "eu_merton_crra",
    "eu_constrained_crra",
    "expected_utility_curve",
    "admissible_rho_grid",
    "ProjectionKnots",
    "projection_knots",
]


# ---------------------------------------------------------------------------
# Utility specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UtilitySpec:
    """Utility through its marginal u' and the inverse marginal (u')^{-1}.

    u' must be strictly decreasing and positive on the open domain (a, b),
    exploding at a and vanishing at b.  ``u`` itself is optional and only
    needed to evaluate expected utilities.
    """

    kind: str
    u_prime: Callable = field(repr=False)
    u_prime_inv: Callable = field(repr=False)
    domain: tuple[float, float] = (0.0, np.inf)
    u: Callable | None = field(default=None, repr=False)
    eta: float | None = None


def crra_utility(eta: float) -> UtilitySpec:
    """Constant relative risk aversion: u(x) = x^{1-eta}/(1-eta), ln at eta = 1."""
    if not eta > 0:
        raise ValueError("eta must be > 0")
    if eta == 1.0:
        u = np.log
    else:
        def u(x, _eta=eta):
            return np.asarray(x, dtype=float) ** (1.0 - _eta) / (1.0 - _eta)

    return UtilitySpec(
        kind="crra",
        u_prime=lambda x: np.asarray(x, dtype=float) ** (-eta),
        u_prime_inv=lambda y: np.asarray(y, dtype=float) ** (-1.0 / eta),
        domain=(0.0, np.inf),
        u=u,
        eta=eta,
    )


def custom_utility(u_prime, u_prime_inv, domain=(0.0, np.inf), u=None) -> UtilitySpec:
    """Wrap user-supplied marginal utility callables, validating the contract."""
    a, b = domain
    if not a < b:
        raise ValueError("domain must satisfy a < b")
    ref = (b - a) if np.isfinite(b) else max(1.0, abs(a) + 1.0)
    lo = a + 1e-9 * ref
    hi = b - 1e-9 * ref if np.isfinite(b) else max(1e9, 1e9 * ref)
    grid = np.exp(np.linspace(np.log(lo - a + 1e-300), np.log(hi - a), 64)) + a
    up = np.asarray(u_prime(grid), dtype=float)
    if np.any(up <= 0):
        raise ValueError("u' must be positive on the domain")
    if np.any(np.diff(up) >= 0):
        raise ValueError("u' must be strictly decreasing on the domain")
    round_trip = np.asarray(u_prime_inv(up), dtype=float)
    if not np.allclose(round_trip, grid, rtol=1e-10, atol=1e-10 * ref):
        raise ValueError("(u')^{-1} does not invert u' to 1e-10 on the test grid")
    mid = np.asarray(u_prime(0.5 * (lo + min(hi, lo * 1e6 + 1.0))), dtype=float)
    if not up[0] > 1e6 * mid:
        raise ValueError("u' must explode at the lower domain boundary")
    if not up[-1] < 1e-6 * mid:
        raise ValueError("u' must vanish at the upper domain boundary")
    return UtilitySpec(kind="custom", u_prime=u_prime, u_prime_inv=u_prime_inv,
                       domain=(float(a), float(b)), u=u)


class BudgetNotAttainableError(ValueError):
    """The budget lies outside the prices reachable within the utility domain."""

    def __init__(self, w0: float, lo: float, hi: float):
        self.w0, self.lo, self.hi = w0, lo, hi
        super().__init__(
            f"budget {w0:.6f} not attainable; the utility domain admits prices in "
            f"({lo:.6f}, {hi:.6f})"
        )


# ---------------------------------------------------------------------------
# Projection knots: uniform z-grid plus Gaussian tails, probit scale
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProjectionKnots:
    """Knots for phi and its projection: probits ``w``, levels ``z``, masses."""

    w: np.ndarray
    z: np.ndarray
    weights: np.ndarray


def projection_knots(n_uniform: int = 2001, w_tail: float = 7.5,
                     tail_step: float = 0.005) -> ProjectionKnots:
    """Uniform z-knots augmented with probit-spaced tail knots.

    The uniform part carries the L2[0,1] geometry of the projection; the
    probit-spaced knots (every ``tail_step`` from |w| = 1.5 out to
    ``w_tail``) keep the cells narrow where a uniform z-grid coarsens and
    carry the tail mass it truncates, which the budget quadrature needs.
    """
    z_uni = np.linspace(1.0 / (n_uniform + 1), n_uniform / (n_uniform + 1), n_uniform)
    w_uni = norm.ppf(z_uni)
    w_aux = np.arange(1.5, w_tail + 0.5 * tail_step, tail_step)
    w = np.union1d(w_uni, np.concatenate([-w_aux[::-1], w_aux]))
    mids = np.concatenate([[-np.inf], 0.5 * (w[1:] + w[:-1]), [np.inf]])
    weights = np.diff(norm.cdf(mids))
    return ProjectionKnots(w=w, z=norm.cdf(w), weights=weights)


_QUAD_W = np.linspace(-7.5, 7.5, 6001)
_QUAD_PDF = norm.pdf(_QUAD_W)


def _solve_lambda(budget_fn, w0: float) -> float:
    """Bracketed root of the strictly decreasing budget map lambda -> price."""
    lo = hi = 1.0
    b = budget_fn(1.0)
    if b > w0:
        for _ in range(400):
            hi *= 10.0
            if budget_fn(hi) <= w0:
                break
        else:
            raise BudgetNotAttainableError(w0, 0.0, b)
    else:
        for _ in range(400):
            lo /= 10.0
            if budget_fn(lo) >= w0:
                break
        else:
            raise BudgetNotAttainableError(w0, b, np.inf)
    return float(brentq(lambda lam: budget_fn(lam) - w0, lo, hi, rtol=8.9e-16, maxiter=300))


# ---------------------------------------------------------------------------
# Classical optimum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MertonOptimum:
    payoff: PayoffFn
    lam: float


def merton_optimum(utility: UtilitySpec, w0: float, params: MarketParams) -> MertonOptimum:
    """Unconstrained optimum (u')^{-1}(lambda xi_T), increasing in S_T.

    lambda is solved on the probit scale so that E[xi_T X*] = w0 to
    quadrature accuracy.
    """
    if not w0 > 0:
        raise ValueError("w0 must be > 0")
    T = params.t_mat
    theta = params.theta
    xi_q = np.exp(-params.r * T - 0.5 * theta**2 * T - theta * np.sqrt(T) * _QUAD_W)
    a, b = utility.domain
    lo_price = a * np.exp(-params.r * T) if a > 0 else 0.0
    hi_price = b * np.exp(-params.r * T) if np.isfinite(b) else np.inf
    if not lo_price < w0 < hi_price:
        raise BudgetNotAttainableError(w0, lo_price, hi_price)

    def budget(lam: float) -> float:
        x = utility.u_prime_inv(lam * xi_q)
        return float(np.trapezoid(xi_q * x * _QUAD_PDF, _QUAD_W))

    lam = _solve_lambda(budget, w0)

    def fn(s):
        return utility.u_prime_inv(lam * state_price_density(params, s, T))

    return MertonOptimum(payoff=terminal_payoff(fn, T, label="eut-optimum"), lam=lam)


# ---------------------------------------------------------------------------
# Conditional expectation of xi given Z, closed form or Monte Carlo
# ---------------------------------------------------------------------------


def _phi_fn(benchmark: Benchmark, copula: CopulaSpec, params: MarketParams,
            phi_source: str, config: mc.SimConfig | None, zmap: ZMap):
    """Callable w -> E[xi_T | Phi^{-1}(Z) = w] plus the source tag."""
    c = effective_corr_horizon(benchmark, copula, params)
    if phi_source == "auto":
        phi_source = "closed-form" if c is not None else "mc"
    if phi_source == "closed-form":
        if c is None:
            raise ValueError("no closed form for E[xi|Z] with an external benchmark")
        theta = params.theta
        delta = np.exp(-params.r * params.t_mat - 0.5 * theta**2 * c**2)

        def phi(w):
            return delta * np.exp(-theta * c * np.asarray(w, dtype=float))

        return phi, "closed-form"
    if phi_source != "mc":
        raise ValueError("phi_source must be 'auto', 'closed-form' or 'mc'")
    if config is None:
        config = mc.SimConfig(n_paths=1 << 20, seed=617, steps_per_year=252)
    table = mc.simulate(config, params, times=zmap.times, want_average=zmap.uses_average)
    obs = [table.s[t] for t in zmap.times]
    if zmap.uses_average:
        obs.append(table.g)
    w_samp = zmap.w_fn(*obs)
    order = np.argsort(w_samp)
    n_bins = 200
    chunks = np.array_split(order, n_bins)
    w_centers = np.array([w_samp[idx].mean() for idx in chunks])
    xi_means = np.array([table.xi[idx].mean() for idx in chunks])

    def phi(w):
        return np.interp(np.asarray(w, dtype=float), w_centers, xi_means)

    return phi, "mc"


def conditional_expectation_xi_given_z(benchmark: Benchmark, copula: CopulaSpec,
                                       params: MarketParams, z_grid,
                                       phi_source: str = "auto",
                                       config: mc.SimConfig | None = None) -> np.ndarray:
    """phi(z) = E[xi_T | Z_T = z] on the given probability grid.

    Closed form for market benchmarks (exponential in Phi^{-1}(z)); Monte
    Carlo bin regression otherwise.  The grid-weighted mean of phi equals the
    bond price e^{-rT} by the tower property.
    """
    z_grid = np.asarray(z_grid, dtype=float)
    if np.any((z_grid <= 0) | (z_grid >= 1)):
        raise ValueError("z_grid must lie strictly inside (0, 1)")
    zmap = z_transform(benchmark, copula, params)
    phi, _ = _phi_fn(benchmark, copula, params, phi_source, config, zmap)
    return np.asarray(phi(norm.ppf(z_grid)), dtype=float)


# ---------------------------------------------------------------------------
# Constrained optimum
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstrainedOptimum:
    """Dependence-constrained optimum with the projection diagnostics."""

    payoff: PayoffFn
    lam: float
    fit: IsotonicFit
    zmap: ZMap = field(repr=False)
    is_constant: bool
    phi_source: str


def constrained_eut_optimum(utility: UtilitySpec, w0: float, benchmark: Benchmark,
                            copula: CopulaSpec, params: MarketParams,
                            phi_source: str = "auto",
                            config: mc.SimConfig | None = None,
                            knots: ProjectionKnots | None = None) -> ConstrainedOptimum:
    """Optimum of E[u(X_T)] under the budget and a copula constraint with A_T.

    Builds Z from the benchmark and copula, computes phi = E[xi|Z], projects
    it onto the nonincreasing cone (PAVA) and returns
    (u')^{-1}(lambda phi_hat(Z)).  Degenerate constraints that force phi_hat
    constant (e.g. the Frechet-lower bound with the terminal benchmark)
    yield the risk-free payoff w0 e^{rT}, flagged by ``is_constant`` rather
    than raised.
    """
    if not w0 > 0:
        raise ValueError("w0 must be > 0")
    zmap = z_transform(benchmark, copula, params)
    phi, source = _phi_fn(benchmark, copula, params, phi_source, config, zmap)
    if knots is None:
        knots = projection_knots()
    phi_k = np.asarray(phi(knots.w), dtype=float)
    fit = isotonic_project(phi_k, weights=knots.weights, grid=knots.z)
    phi_hat_q = np.interp(_QUAD_W, knots.w, fit.phi_hat)
    phi_q = np.asarray(phi(_QUAD_W), dtype=float)

    a, b = utility.domain
    lo_price = a * np.exp(-params.r * params.t_mat) if a > 0 else 0.0
    hi_price = b * np.exp(-params.r * params.t_mat) if np.isfinite(b) else np.inf
    if not lo_price < w0 < hi_price:
        raise BudgetNotAttainableError(w0, lo_price, hi_price)

    def budget(lam: float) -> float:
        k = utility.u_prime_inv(lam * phi_hat_q)
        return float(np.trapezoid(phi_q * k * _QUAD_PDF, _QUAD_W))

    lam = _solve_lambda(budget, w0)
    w_knots = knots.w
    phi_hat = fit.phi_hat
    is_constant = bool(np.ptp(phi_hat) <= 1e-12 * max(abs(phi_hat[0]), 1e-300))

    def fn(*obs):
        w = zmap.w_fn(*obs)
        return utility.u_prime_inv(lam * np.interp(w, w_knots, phi_hat))

    if zmap.uses_average:
        payoff = PayoffFn(times=zmap.times, fn=fn, uses_average=True,
                          label="constrained-eut-optimum")
    elif len(zmap.times) == 2:
        payoff = two_point_payoff(fn, zmap.times[0], zmap.times[1],
                                  label="constrained-eut-optimum")
    else:
        payoff = terminal_payoff(fn, zmap.times[0], label="constrained-eut-optimum")
    return ConstrainedOptimum(payoff=payoff, lam=lam, fit=fit, zmap=zmap,
                              is_constant=is_constant, phi_source=source)


# ---------------------------------------------------------------------------
# Expected utility
# ---------------------------------------------------------------------------


def expected_utility(payoff: PayoffFn, utility: UtilitySpec, params: MarketParams,
                     method: str = "auto", config: mc.SimConfig | None = None) -> float:
    """E[u(X_T)] by quadrature (terminal / two-date payoffs) or Monte Carlo.

    Raises when the payoff leaves the utility domain with positive
    probability, naming the offending region.
    """
    if utility.u is None:
        raise ValueError("utility carries no u; supply one to evaluate expected utility")
    a, b = utility.domain

    def check_domain(values, where):
        bad = (values <= a) | (values >= b)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise ValueError(
                f"payoff leaves the utility domain ({a}, {b}): value "
                f"{values[bad][0]:.6g} at {where[i]}"
            )

    if method == "auto":
        if payoff.uses_average:
            method = "mc"
        else:
            method = "quadrature"
    if method == "quadrature":
        if payoff.uses_average:
            raise ValueError("quadrature supports terminal and two-date payoffs only")
        if len(payoff.times) == 1:
            from .market import terminal_log_law

            law = terminal_log_law(params)
            w = np.linspace(-10, 10, 20001)
            s = np.exp(law.mean + law.sd * w)
            values = np.asarray(payoff(s), dtype=float)
            check_domain(values, [f"S_T={x:.6g}" for x in s])
            return float(np.trapezoid(utility.u(values) * norm.pdf(w), w))
        t = payoff.times[0]
        return _gh_expect_two_point(
            lambda s_t, s_T: _checked_u(utility, payoff, s_t, s_T), params, t)
    if method == "mc":
        if config is None:
            config = mc.SimConfig(n_paths=200_000, seed=831, steps_per_year=252)
        table = mc.simulate(config, params, times=payoff.times,
                            want_average=payoff.uses_average)
        values = mc.evaluate_payoff(payoff, table)
        check_domain(values, [f"path {i}" for i in range(values.size)])
        return float(np.mean(utility.u(values)))
    raise ValueError("method must be 'auto', 'quadrature' or 'mc'")


def _checked_u(utility, payoff, s_t, s_T):
    values = np.asarray(payoff(s_t, s_T), dtype=float)
    a, b = utility.domain
    if np.any((values <= a) | (values >= b)):
        raise ValueError(f"payoff leaves the utility domain ({a}, {b})")
    return utility.u(values)


def _gh_expect_two_point(fn, params: MarketParams, t: float, n: int = 201) -> float:
    """Gauss-Hermite E[fn(S_t, S_T)] over the two independent GBM shocks."""
    nodes, weights = np.polynomial.hermite_e.hermegauss(n)
    weights = weights / np.sqrt(2.0 * np.pi)
    T = params.t_mat
    w1, w2 = np.meshgrid(nodes, nodes, indexing="ij")
    ww = np.outer(weights, weights)
    s_t = params.s0 * np.exp(params.log_drift(t) + params.sigma * np.sqrt(t) * w1)
    s_T = s_t * np.exp(params.log_drift(T - t) + params.sigma * np.sqrt(T - t) * w2)
    return float(np.sum(np.asarray(fn(s_t, s_T), dtype=float) * ww))


# ---------------------------------------------------------------------------
# CRRA closed forms
# ---------------------------------------------------------------------------


def merton_crra_payoff(params: MarketParams, eta: float, w0: float) -> PayoffFn:
    """Closed-form CRRA optimum: a power of S_T.

        X*(eta) = W0 e^{rT} e^{-(1/eta)(theta/sigma)(mu - sigma^2/2) T
                            + (1/eta - 1/(2 eta^2)) theta^2 T}
                  (S_T/S0)^{theta/(eta sigma)}.
    """
    T, theta, sigma = params.t_mat, params.theta, params.sigma
    lead = w0 * np.exp(params.r * T) * np.exp(
        -(1.0 / eta) * (theta / sigma) * (params.mu - 0.5 * sigma**2) * T
        + (1.0 / eta - 1.0 / (2.0 * eta**2)) * theta**2 * T
    )
    expo = theta / (eta * sigma)
    return terminal_payoff(lambda s: lead * (s / params.s0) ** expo, T,
                           label=f"crra-optimum(eta={eta:g})")


def constrained_crra_payoff(params: MarketParams, eta: float, w0: float,
                            rho: float, t: float) -> PayoffFn:
    """Closed-form CRRA optimum under a Gaussian(rho) constraint with S_t.

    Power function of (S_t, S_T) with exponents built from
    c = rho sqrt(t) + sqrt((1 - rho^2)(T - t)); coincides with the
    unconstrained optimum at rho = sqrt(t/T).
    """
    T, theta, sigma = params.t_mat, params.theta, params.sigma
    lo, hi = admissible_rho_interval(t, T)
    if not lo <= rho < hi:
        raise ValueError(f"rho={rho} outside the admissible range [{lo:.6f}, 1)")
    c = rho * np.sqrt(t) + np.sqrt((1.0 - rho**2) * (T - t))
    lead = w0 * np.exp(params.r * T) * np.exp(
        -(1.0 / eta) * (theta / sigma) * (params.mu - 0.5 * sigma**2) * c**2
        + (1.0 / eta - 1.0 / (2.0 * eta**2)) * theta**2 * c**2
    )
    exp_T = (theta / (eta * sigma)) * c * np.sqrt(1.0 - rho**2) / np.sqrt(T - t)
    exp_t = (theta / (eta * sigma)) * c * (rho / np.sqrt(t) - np.sqrt(1.0 - rho**2) / np.sqrt(T - t))
    s0 = params.s0

    def fn(s_t, s_T):
        return lead * (s_T / s0) ** exp_T * (s_t / s0) ** exp_t

    return two_point_payoff(fn, t, T, label=f"constrained-crra(eta={eta:g},rho={rho:g})")


def eu_merton_crra(params: MarketParams, eta: float, w0: float) -> float:
    """Expected utility of the unconstrained CRRA optimum."""
    T, theta, r = params.t_mat, params.theta, params.r
    if eta == 1.0:
        return float(np.log(w0) + r * T + 0.5 * theta**2 * T)
    return float(w0 ** (1.0 - eta) / (1.0 - eta)
                 * np.exp((1.0 - eta) * r * T + 0.5 * (1.0 - eta) / eta * theta**2 * T))


def eu_constrained_crra(params: MarketParams, eta: float, w0: float,
                        rho: float, t: float) -> float:
    """Expected utility of the Gaussian(rho)-constrained CRRA optimum."""
    T, theta, r = params.t_mat, params.theta, params.r
    lo, hi = admissible_rho_interval(t, T)
    if not lo <= rho < hi:
        raise ValueError(f"rho={rho} outside the admissible range [{lo:.6f}, 1)")
    c2 = (rho * np.sqrt(t) + np.sqrt((1.0 - rho**2) * (T - t))) ** 2
    if eta == 1.0:
        return float(np.log(w0) + r * T + 0.5 * theta**2 * c2)
    return float(w0 ** (1.0 - eta) / (1.0 - eta)
                 * np.exp((1.0 - eta) * r * T + 0.5 * (1.0 - eta) / eta * theta**2 * c2))


def admissible_rho_grid(t: float, t_mat: float, n: int = 41) -> np.ndarray:
    """n admissible correlations including the exact touch point sqrt(t/T)."""
    lo, _ = admissible_rho_interval(t, t_mat)
    grid = np.linspace(lo, 0.99, n)
    touch = np.sqrt(t / t_mat)
    grid[int(np.argmin(np.abs(grid - touch)))] = touch
    return np.sort(grid)


def expected_utility_curve(params: MarketParams, eta: float, w0: float,
                           t: float, rho_grid=None) -> np.ndarray:
    """Rows (rho, constrained EU, unconstrained EU) over a correlation grid.

    The unconstrained column is flat; the curves touch exactly at
    rho = sqrt(t/T), where the unconstrained optimum already has the
    requested correlation with S_t.
    """
    if rho_grid is None:
        rho_grid = admissible_rho_grid(t, params.t_mat)
    rho_grid = np.asarray(rho_grid, dtype=float)
    eu_u = eu_merton_crra(params, eta, w0)
    rows = [(rho, eu_constrained_crra(params, eta, w0, rho, t), eu_u) for rho in rho_grid]
    return np.asarray(rows, dtype=float)
