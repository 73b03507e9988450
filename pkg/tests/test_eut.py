import numpy as np
import pytest
from scipy.stats import multivariate_normal, norm

from payoffopt import (
    BudgetNotAttainableError,
    constrained_crra_payoff,
    constrained_eut_optimum,
    crra_utility,
    custom_utility,
    eu_constrained_crra,
    eu_merton_crra,
    expected_utility,
    expected_utility_curve,
    frechet_lower,
    frechet_upper,
    gaussian_copula,
    geometric_benchmark,
    intermediate_benchmark,
    merton_crra_payoff,
    merton_optimum,
    terminal_benchmark,
)
from payoffopt import mc
from payoffopt.eut import (
    admissible_rho_grid,
    conditional_expectation_xi_given_z,
    projection_knots,
)
from payoffopt.pricing import gh_price_two_point, quad_price_terminal

T = 1.0
T_HALF = 0.5
W0 = 100.0


def test_merton_crra_matches_closed_form(params):
    for eta in (0.7, 1.0, 2.0):
        got = merton_optimum(crra_utility(eta), W0, params)
        ref = merton_crra_payoff(params, eta, W0)
        s = np.exp(np.linspace(np.log(40), np.log(260), 80))
        assert np.max(np.abs(got.payoff(s) - ref(s)) / ref(s)) < 1e-9


def test_merton_budget_identity(params):
    for eta in (1.0, 2.0):
        pay = merton_optimum(crra_utility(eta), W0, params).payoff
        q = quad_price_terminal(pay.fn, params)
        assert q.value == pytest.approx(W0, rel=1e-8)


def test_merton_payoff_increasing(params):
    pay = merton_optimum(crra_utility(2.0), W0, params).payoff
    s = np.linspace(20, 500, 400)
    assert np.all(np.diff(pay(s)) > 0)


def test_log_utility_expected_value(params):
    # E[u(X*)] = ln W0 + rT + theta^2 T / 2 for log utility
    want = np.log(W0) + params.r * T + 0.5 * params.theta**2 * T
    assert eu_merton_crra(params, 1.0, W0) == pytest.approx(want, rel=1e-14)
    pay = merton_crra_payoff(params, 1.0, W0)
    got = expected_utility(pay, crra_utility(1.0), params, method="quadrature")
    assert got == pytest.approx(want, rel=1e-10)


def test_crra_expected_utility_closed_form(params):
    # eta != 1: (W0^{1-eta}/(1-eta)) e^{(1-eta) rT + ((1-eta)/(2 eta)) theta^2 T}
    eta = 2.0
    want = W0 ** (1 - eta) / (1 - eta) * np.exp(
        (1 - eta) * params.r * T + 0.5 * (1 - eta) / eta * params.theta**2 * T)
    assert eu_merton_crra(params, eta, W0) == pytest.approx(want, rel=1e-14)
    got = expected_utility(merton_crra_payoff(params, eta, W0), crra_utility(eta),
                           params, method="quadrature")
    assert got == pytest.approx(want, rel=1e-10)


def test_custom_utility_reproduces_crra(params):
    custom = custom_utility(
        u_prime=lambda x: x**-2.0,
        u_prime_inv=lambda y: y**-0.5,
        domain=(0.0, np.inf),
        u=lambda x: -1.0 / x,
    )
    got = merton_optimum(custom, W0, params).payoff
    ref = merton_crra_payoff(params, 2.0, W0)
    s = np.linspace(50, 200, 30)
    assert np.allclose(got(s), ref(s), rtol=1e-9)


def test_custom_utility_validation():
    with pytest.raises(ValueError, match="invert"):
        custom_utility(lambda x: x**-2.0, lambda y: y**-0.9)
    with pytest.raises(ValueError, match="decreasing"):
        custom_utility(lambda x: x**2.0, lambda y: y**0.5)


def test_bounded_domain_budget_feasibility(params):
    # utility on (50, 60): budgets outside (50 e^{-rT}, 60 e^{-rT}) rejected
    util = custom_utility(
        u_prime=lambda x: (60.0 - x) / (x - 50.0),
        u_prime_inv=lambda y: (60.0 + 50.0 * y) / (1.0 + y),
        domain=(50.0, 60.0),
    )
    with pytest.raises(BudgetNotAttainableError):
        merton_optimum(util, 100.0, params)
    with pytest.raises(BudgetNotAttainableError):
        merton_optimum(util, 40.0, params)
    res = merton_optimum(util, 55.0, params)
    q = quad_price_terminal(res.payoff.fn, params)
    assert q.value == pytest.approx(55.0, rel=1e-8)


def test_phi_exponent_and_normalization(params):
    # phi(z) = delta e^{-theta c Phi^{-1}(z)} with c = rho sqrt(t)
    # + sqrt((1-rho^2)(T-t)); knot-weighted mean reproduces the bond price
    rho, t = 0.3, T_HALF
    z = np.array([0.1, 0.25, 0.5, 0.75, 0.9])
    phi = conditional_expectation_xi_given_z(
        intermediate_benchmark(t), gaussian_copula(rho), params, z)
    c = rho * np.sqrt(t) + np.sqrt((1 - rho**2) * (T - t))
    slope = np.polyfit(norm.ppf(z), np.log(phi), 1)[0]
    assert slope == pytest.approx(-params.theta * c, rel=1e-10)
    knots = projection_knots()
    phi_k = conditional_expectation_xi_given_z(
        intermediate_benchmark(t), gaussian_copula(rho), params, knots.z)
    assert np.dot(knots.weights, phi_k) == pytest.approx(
        np.exp(-params.r * T), rel=1e-8)


def test_phi_frechet_upper_terminal_is_xi(params):
    # A_T = S_T with the comonotone constraint: phi(z) = xi at the z-quantile
    from payoffopt.market import quantile_sT, state_price_density

    z = np.linspace(0.02, 0.98, 25)
    phi = conditional_expectation_xi_given_z(
        terminal_benchmark(), frechet_upper(), params, z)
    ref = state_price_density(params, quantile_sT(params, z), T)
    assert np.allclose(phi, ref, rtol=1e-12)


def test_phi_mc_estimator_matches_closed_form(params):
    rho, t = 0.3, T_HALF
    z = np.linspace(0.05, 0.95, 19)
    closed = conditional_expectation_xi_given_z(
        intermediate_benchmark(t), gaussian_copula(rho), params, z)
    est = conditional_expectation_xi_given_z(
        intermediate_benchmark(t), gaussian_copula(rho), params, z,
        phi_source="mc", config=mc.SimConfig(n_paths=1 << 19, steps_per_year=8, seed=501))
    assert np.max(np.abs(est / closed - 1.0)) < 0.02


def test_constrained_equals_merton_for_comonotone_terminal(params):
    util = crra_utility(2.0)
    res = constrained_eut_optimum(util, W0, terminal_benchmark(), frechet_upper(), params)
    ref = merton_optimum(util, W0, params).payoff
    s = np.exp(np.linspace(np.log(50), np.log(220), 60))
    assert np.max(np.abs(res.payoff(s) - ref(s)) / ref(s)) < 1e-5
    assert not res.is_constant


def test_constrained_frechet_lower_terminal_is_risk_free(params):
    # anti-monotonicity with S_T forces the budget into the bank account
    util = crra_utility(2.0)
    res = constrained_eut_optimum(util, W0, terminal_benchmark(), frechet_lower(), params)
    assert res.is_constant
    s = np.array([60.0, 100.0, 180.0])
    assert np.allclose(res.payoff(s), W0 * np.exp(params.r * T), rtol=1e-6)


def test_generic_pipeline_reproduces_crra_closed_form(params):
    # the PAVA pipeline reproduces the closed-form constrained optimum to 1e-4
    for eta, rho in ((1.0, 0.3), (2.0, 0.3), (2.0, -0.5)):
        res = constrained_eut_optimum(crra_utility(eta), W0,
                                      intermediate_benchmark(T_HALF),
                                      gaussian_copula(rho), params)
        ref = constrained_crra_payoff(params, eta, W0, rho, T_HALF)
        qs = norm.ppf(np.linspace(0.02, 0.98, 15))
        s_t = params.s0 * np.exp(params.log_drift(T_HALF)
                                 + params.sigma * np.sqrt(T_HALF) * qs)
        a, b = np.meshgrid(s_t, params.s0 * np.exp(params.log_drift(T)
                                                   + params.sigma * np.sqrt(T) * qs))
        rel = np.abs(res.payoff(a, b) - ref(a, b)) / ref(a, b)
        assert rel.max() < 1e-4


def test_constrained_coincides_with_unconstrained_at_natural_rho(params):
    rho_star = np.sqrt(T_HALF / T)
    for eta in (1.0, 2.0):
        con = constrained_crra_payoff(params, eta, W0, rho_star, T_HALF)
        unc = merton_crra_payoff(params, eta, W0)
        s_t = np.array([70.0, 100.0, 150.0])
        s_T = np.array([120.0, 90.0, 105.0])
        assert np.allclose(con(s_t, s_T), unc(s_T), rtol=1e-10)


def test_constrained_budget_identity(params):
    # E[xi X_hat] = W0 to 1e-6 relative, by independent 2-D quadrature
    for eta, rho in ((1.0, 0.3), (2.0, -0.4)):
        closed = constrained_crra_payoff(params, eta, W0, rho, T_HALF)
        q = gh_price_two_point(closed.fn, params, T_HALF)
        assert q.value == pytest.approx(W0, rel=1e-6)
        res = constrained_eut_optimum(crra_utility(eta), W0,
                                      intermediate_benchmark(T_HALF),
                                      gaussian_copula(rho), params)
        q2 = gh_price_two_point(res.payoff.fn, params, T_HALF)
        assert q2.value == pytest.approx(W0, rel=1e-6)


def test_constrained_expected_utility_closed_forms(params):
    # eta = 1: ln W0 + rT + theta^2 (rho sqrt(t) + sqrt(1-rho^2) sqrt(T-t))^2 / 2
    rho = 0.3
    c = rho * np.sqrt(T_HALF) + np.sqrt((1 - rho**2) * (T - T_HALF))
    want = np.log(W0) + params.r * T + 0.5 * params.theta**2 * c**2
    assert eu_constrained_crra(params, 1.0, W0, rho, T_HALF) == pytest.approx(want)
    got = expected_utility(constrained_crra_payoff(params, 1.0, W0, rho, T_HALF),
                           crra_utility(1.0), params, method="quadrature")
    assert got == pytest.approx(want, rel=1e-10)
    got2 = expected_utility(constrained_crra_payoff(params, 2.0, W0, rho, T_HALF),
                            crra_utility(2.0), params, method="quadrature")
    assert got2 == pytest.approx(eu_constrained_crra(params, 2.0, W0, rho, T_HALF),
                                 rel=1e-10)


def test_expected_utility_mc_agrees(params):
    pay = constrained_crra_payoff(params, 2.0, W0, 0.3, T_HALF)
    quad = expected_utility(pay, crra_utility(2.0), params, method="quadrature")
    got = expected_utility(pay, crra_utility(2.0), params, method="mc",
                           config=mc.SimConfig(n_paths=400_000, steps_per_year=2, seed=502))
    assert got == pytest.approx(quad, rel=2e-3)


def test_dominance_with_single_touch_point(params):
    for eta in (1.0, 2.0):
        curve = expected_utility_curve(params, eta, W0, T_HALF)
        assert curve.shape[0] == 41
        gap = curve[:, 2] - curve[:, 1]
        assert np.all(gap >= -1e-12)
        touch = np.isclose(curve[:, 0], np.sqrt(T_HALF / T))
        assert touch.sum() == 1
        assert abs(gap[touch][0]) < 1e-10
        assert np.all(gap[~touch] > 0)


def test_monotone_in_z(params):
    res = constrained_eut_optimum(crra_utility(2.0), W0,
                                  intermediate_benchmark(T_HALF),
                                  gaussian_copula(0.3), params)
    rng = np.random.default_rng(503)
    s_t = np.exp(rng.normal(np.log(100), 0.2, 500))
    s_T = np.exp(rng.normal(np.log(100), 0.3, 500))
    w = res.zmap.w_fn(s_t, s_T)
    x = res.payoff(s_t, s_T)
    order = np.argsort(w)
    assert np.all(np.diff(x[order]) >= -1e-12 * np.max(x))


def test_rho_admissibility_enforced(params):
    util = crra_utility(2.0)
    with pytest.raises(ValueError):
        constrained_eut_optimum(util, W0, intermediate_benchmark(T_HALF),
                                gaussian_copula(-0.9), params)
    with pytest.raises(ValueError):
        constrained_crra_payoff(params, 2.0, W0, -0.9, T_HALF)
    with pytest.raises(ValueError):
        eu_constrained_crra(params, 2.0, W0, -0.9, T_HALF)


def test_admissible_grid_contains_touch_point():
    grid = admissible_rho_grid(T_HALF, T)
    assert grid.size == 41
    assert np.any(grid == np.sqrt(T_HALF / T))
    assert grid[0] >= -np.sqrt(1 - T_HALF / T) - 1e-12


def test_copula_preservation(params):
    # the empirical copula of (X_hat, S_t) matches the Gaussian target
    rho = 0.3
    res = constrained_eut_optimum(crra_utility(2.0), W0,
                                  intermediate_benchmark(T_HALF),
                                  gaussian_copula(rho), params)
    cfg = mc.SimConfig(n_paths=100_000, steps_per_year=8, seed=504)
    table = mc.simulate(cfg, params, times=(T_HALF,))
    x = res.payoff(table.s[T_HALF], table.s_terminal)
    a = table.s[T_HALF]
    n = x.size
    u = (np.argsort(np.argsort(x)) + 1.0) / (n + 1)
    v = (np.argsort(np.argsort(a)) + 1.0) / (n + 1)
    qs = np.linspace(0.02, 0.98, 49)
    mvn = multivariate_normal(mean=[0.0, 0.0], cov=[[1.0, rho], [rho, 1.0]])
    grid_u, grid_v = np.meshgrid(qs, qs, indexing="ij")
    pts = norm.ppf(np.column_stack([grid_u.ravel(), grid_v.ravel()]))
    target = mvn.cdf(pts).reshape(grid_u.shape)
    emp = np.empty_like(target)
    for i, qu in enumerate(qs):
        mask_u = u <= qu
        for j, qv in enumerate(qs):
            emp[i, j] = np.mean(mask_u & (v <= qv))
    assert np.max(np.abs(emp - target)) < 0.01


def test_geometric_benchmark_constraint(params):
    # dependence with the running average: pipeline runs and prices to budget
    res = constrained_eut_optimum(crra_utility(2.0), W0, geometric_benchmark(),
                                  gaussian_copula(0.5), params)
    cfg = mc.SimConfig(n_paths=200_000, steps_per_year=252, seed=505)
    est = mc.price(res.payoff, cfg, params)
    assert abs(est.value - W0) <= 3 * est.stderr


def test_domain_violation_reported(params):
    from payoffopt.payoffs import terminal_payoff

    pay = terminal_payoff(lambda s: s - 150.0, T)
    with pytest.raises(ValueError, match="domain"):
        expected_utility(pay, crra_utility(2.0), params, method="quadrature")
