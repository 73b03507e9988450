"""Acceptance gate: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them all).

Known red: criterion 1 asserts the two-decimal reference constants
6.74 / 5.86 for the floating-strike pair.  The exact closed forms evaluate
to 6.0088 / 5.1946 at the stated parameters, and the independent Monte
Carlo and quadrature oracles confirm those values, so the reference-constant
assertion fails by design; the numbers are recoverable only by flipping the
sign of the sigma^2 T / 12 exponent, which the oracles rule out.
"""
import time

import numpy as np
import pytest
from scipy.stats import norm

from payoffopt import MarketParams
from payoffopt import mc
from payoffopt.asian import (
    REFERENCE_CHEAPEST_TWIN,
    REFERENCE_FLOATING_PUT,
    REFERENCE_TOLERANCE,
    cheapest_floating_twin_payoff,
    floating_put_payoff,
    price_cheapest_floating_twin,
    price_floating_asian_put,
    price_kemna_vorst,
)
from payoffopt.cost_efficiency import power_put_payoff
from payoffopt.eut import (
    admissible_rho_grid,
    constrained_crra_payoff,
    constrained_eut_optimum,
    crra_utility,
    eu_constrained_crra,
    eu_merton_crra,
)
from payoffopt.copulas import gaussian_copula
from payoffopt.dependence import intermediate_benchmark
from payoffopt.isotonic import pava_nonincreasing
from payoffopt.payoffs import european_put
from payoffopt.pricing import gh_price_two_point
from payoffopt.target_prob import TargetProblem, browne_optimum, figure2_curve
from payoffopt.twins import asian_twin_exponents, best_twin_by_correlation, \
    geometric_average_joint_spec

SEED = 20240613
KS2_1PCT = np.sqrt(-0.5 * np.log(0.005))


@pytest.fixture(scope="module")
def params():
    return MarketParams(mu=0.06, r=0.02, sigma=0.3, s0=100.0, t_mat=1.0)


def report(n, ok, detail):
    print(f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}")


def test_criterion_1_floating_strike_prices(params):
    """Closed forms vs the 6.74/5.86 reference constants, MC within 3 stderr."""
    start = time.monotonic()
    closed_put = price_floating_asian_put(params).value
    closed_twin = price_cheapest_floating_twin(params).value
    cfg = mc.SimConfig(n_paths=1_000_000, steps_per_year=252, seed=SEED)
    table = mc.simulate(cfg, params, want_average=True)
    est_put = mc.estimate_mean(
        table.xi * floating_put_payoff(params)(table.s_terminal, table.g), cfg)
    est_twin = mc.estimate_mean(
        table.xi * cheapest_floating_twin_payoff(params)(table.s_terminal, table.g), cfg)
    elapsed = time.monotonic() - start

    mc_ok = (abs(est_put.value - closed_put) <= 3 * est_put.stderr
             and abs(est_twin.value - closed_twin) <= 3 * est_twin.stderr)
    ref_ok = (abs(closed_put - REFERENCE_FLOATING_PUT) <= REFERENCE_TOLERANCE
              and abs(closed_twin - REFERENCE_CHEAPEST_TWIN) <= REFERENCE_TOLERANCE)
    runtime_ok = elapsed < 30.0
    report(1, mc_ok and ref_ok and runtime_ok,
           f"closed=({closed_put:.4f}, {closed_twin:.4f}) "
           f"mc=({est_put.value:.4f}±{est_put.stderr:.4f}, "
           f"{est_twin.value:.4f}±{est_twin.stderr:.4f}) "
           f"reference=(6.74, 5.86) runtime={elapsed:.1f}s; "
           f"MC-agreement={'ok' if mc_ok else 'FAIL'}, "
           f"reference-match={'ok' if ref_ok else 'FAIL (constants carry a sign slip; "
           f"oracles confirm the formula values)'}")
    assert runtime_ok
    assert mc_ok, "Monte Carlo disagrees with the closed forms"
    assert ref_ok, (
        f"closed forms give {closed_put:.4f} / {closed_twin:.4f}, not 6.74 / 5.86; "
        "the reference constants are not reproducible from the exact formulas "
        "(sign slip in the sigma^2 T/12 exponent), as confirmed by the MC and "
        "quadrature oracles"
    )


def test_criterion_2_twin_correlation(params):
    """t* = T/2 and rho_max = 3/4 + sqrt(3)/8 to 1e-4 in two market settings."""
    target = 0.75 + np.sqrt(3.0) / 8.0
    ok = True
    details = []
    for sigma, T in ((0.3, 1.0), (0.45, 2.0)):
        p = MarketParams(mu=0.06, r=0.02, sigma=sigma, s0=100.0, t_mat=T)
        grid = np.unique(np.concatenate([np.linspace(0.05 * T, 0.95 * T, 19), [T / 2]]))
        scan = best_twin_by_correlation(geometric_average_joint_spec(p), None,
                                        grid, p, method="closed-form")
        here = np.isclose(scan.t_star, T / 2) and abs(scan.rho_star - target) <= 1e-4
        ok = ok and here
        details.append(f"(sigma={sigma},T={T}): t*={scan.t_star:g} rho*={scan.rho_star:.6f}")
    report(2, ok, "; ".join(details) + f" target={target:.6f}")
    assert ok


def test_criterion_3_joint_law_preservation(params):
    """(S_T, R_T(T/2)) matches (S_T, G_T); twin call priced by the closed form."""
    twin = asian_twin_exponents(params, 0.5).payoff(params.t_mat)
    cfg_a = mc.SimConfig(n_paths=100_000, steps_per_year=252, seed=SEED + 1)
    ta = mc.simulate(cfg_a, params, times=(0.5,), want_average=True)
    cfg_b = mc.SimConfig(n_paths=100_000, steps_per_year=252, seed=SEED + 2)
    tb = mc.simulate(cfg_b, params, times=(0.5,), want_average=True)
    r_vals = twin(ta.s[0.5], ta.s_terminal)
    d = mc.joint_law_distance(
        np.column_stack([ta.s_terminal, r_vals]),
        np.column_stack([tb.s_terminal, tb.g]),
    )
    rng = np.random.default_rng(SEED)
    control = mc.joint_law_distance(
        np.column_stack([ta.s_terminal, rng.permutation(ta.g)]),
        np.column_stack([tb.s_terminal, tb.g]),
    )
    price_ok = True
    price_details = []
    for K in (80.0, 100.0, 120.0):
        closed = price_kemna_vorst(params, K).value
        est = mc.estimate_mean(ta.xi * np.maximum(r_vals - K, 0.0), cfg_a)
        price_ok = price_ok and abs(est.value - closed) <= 3 * est.stderr
        price_details.append(f"K={K:g}: {est.value:.3f} vs {closed:.3f}")
    ok = d.statistic < 0.01 and control.statistic > 0.05 and price_ok
    report(3, ok,
           f"distance={d.statistic:.4f} (<0.01), control={control.statistic:.4f} "
           f"(>0.05); twin-call prices: {', '.join(price_details)}")
    assert d.statistic < 0.01
    assert control.statistic > 0.05
    assert price_ok


def test_criterion_4_cost_efficiency(params):
    """Power put strictly cheaper than the put; same law; conditional-mean order."""
    K = params.s0
    cfg = mc.SimConfig(n_paths=200_000, steps_per_year=2, seed=SEED + 3)
    table = mc.simulate(cfg, params)
    power_vals = power_put_payoff(params, K)(table.s_terminal)
    put_vals = european_put(K, params.t_mat)(table.s_terminal)
    diff = table.xi * (put_vals - power_vals)
    se = diff.std(ddof=1) / np.sqrt(diff.size)
    gap_ok = diff.mean() > 3 * se

    n = 100_000
    cfg_b = mc.SimConfig(n_paths=n, steps_per_year=2, seed=SEED + 4)
    other = mc.simulate(cfg_b, params)
    a = power_put_payoff(params, K)(table.s_terminal[:n])
    b = european_put(K, params.t_mat)(other.s_terminal)
    pooled = np.sort(np.concatenate([a, b]))
    fa = np.searchsorted(np.sort(a), pooled, side="right") / a.size
    fb = np.searchsorted(np.sort(b), pooled, side="right") / b.size
    ks = float(np.max(np.abs(fa - fb)))
    ks_ok = ks < KS2_1PCT * np.sqrt(2.0 / n)

    a_grid = np.quantile(table.s_terminal, np.linspace(0.05, 0.95, 10))
    cond_ok = all(
        power_vals[table.s_terminal < a].mean() <= put_vals[table.s_terminal < a].mean()
        for a in a_grid
    )
    report(4, gap_ok and ks_ok and cond_ok,
           f"price gap={diff.mean():.4f} (>{3 * se:.4f}), KS={ks:.5f} "
           f"(<{KS2_1PCT * np.sqrt(2.0 / n):.5f}), conditional-mean order on 10 points: "
           f"{'ok' if cond_ok else 'violated'}")
    assert gap_ok and ks_ok and cond_ok


def test_criterion_5_constrained_eut(params):
    """Dominance with one touch point; PAVA pipeline vs closed form; budget."""
    t = 0.5
    dominance_ok = True
    for eta in (1.0, 2.0):
        grid = admissible_rho_grid(t, params.t_mat)
        eu_u = eu_merton_crra(params, eta, 100.0)
        eu_c = np.array([eu_constrained_crra(params, eta, 100.0, r, t) for r in grid])
        gap = eu_u - eu_c
        touch = np.isclose(grid, np.sqrt(t / params.t_mat))
        dominance_ok = dominance_ok and bool(
            np.all(gap >= -1e-12) and abs(gap[touch][0]) < 1e-10
            and np.all(gap[~touch] > 0))

    pipeline_ok = True
    rel_max = 0.0
    for eta, rho in ((1.0, 0.3), (2.0, 0.3)):
        res = constrained_eut_optimum(crra_utility(eta), 100.0,
                                      intermediate_benchmark(t),
                                      gaussian_copula(rho), params)
        ref = constrained_crra_payoff(params, eta, 100.0, rho, t)
        qs = norm.ppf(np.linspace(0.02, 0.98, 21))
        s_t = params.s0 * np.exp(params.log_drift(t) + params.sigma * np.sqrt(t) * qs)
        s_T = params.s0 * np.exp(params.log_drift(1.0) + params.sigma * qs)
        A, B = np.meshgrid(s_t, s_T)
        rel = float(np.max(np.abs(res.payoff(A, B) - ref(A, B)) / ref(A, B)))
        rel_max = max(rel_max, rel)
        pipeline_ok = pipeline_ok and rel < 1e-4
        budget = gh_price_two_point(res.payoff.fn, params, t).value
        pipeline_ok = pipeline_ok and abs(budget / 100.0 - 1.0) < 1e-6

    ref_budget = gh_price_two_point(
        constrained_crra_payoff(params, 2.0, 100.0, 0.3, t).fn, params, t).value
    budget_ok = abs(ref_budget / 100.0 - 1.0) < 1e-6
    report(5, dominance_ok and pipeline_ok and budget_ok,
           f"dominance+touch(1e-10): {'ok' if dominance_ok else 'FAIL'}; "
           f"pipeline vs closed form max rel err={rel_max:.2e} (<1e-4); "
           f"budget={ref_budget:.8f} (rel err < 1e-6)")
    assert dominance_ok and pipeline_ok and budget_ok


def test_criterion_6_isotonic_projection(params):
    """PAVA equals brute force on 1000 random instances; idempotence exact."""
    from test_isotonic import brute_force_projection

    rng = np.random.default_rng(SEED)
    worst = 0.0
    idempotent = True
    for _ in range(1000):
        n = int(rng.integers(2, 13))
        y = rng.normal(size=n) * rng.uniform(0.5, 3.0)
        w = rng.uniform(0.1, 2.0, size=n) if rng.random() < 0.5 else np.ones(n)
        got = pava_nonincreasing(y, w)
        ref = brute_force_projection(y, w)
        worst = max(worst, float(np.max(np.abs(got - ref))))
        idempotent = idempotent and np.array_equal(got, pava_nonincreasing(got, w))
    ok = worst <= 1e-9 and idempotent
    report(6, ok, f"max |pava - brute force| = {worst:.2e} (<=1e-9); "
                  f"idempotence {'exact' if idempotent else 'violated'}")
    assert ok


def test_criterion_7_target_probability(params):
    """Browne budget and success within 3 stderr; figure-2 curves touch once."""
    w0, b = 100.0, 106.0
    res = browne_optimum(TargetProblem(w0=w0, b=b), params)
    cfg = mc.SimConfig(n_paths=1_000_000, steps_per_year=2, seed=SEED + 5)
    table = mc.simulate(cfg, params)
    vals = res.payoff(table.s_terminal)
    budget = mc.estimate_mean(table.xi * vals, cfg)
    freq = mc.estimate_mean((vals >= b).astype(float), cfg)
    budget_ok = abs(budget.value - w0) <= 3 * budget.stderr
    success_ok = abs(freq.value - res.success_prob) <= 3 * freq.stderr

    t = 0.5
    curve = figure2_curve(params, w0, b, t, admissible_rho_grid(t, params.t_mat))
    gap = curve[:, 2] - curve[:, 1]
    touch = np.isclose(curve[:, 0], np.sqrt(t / params.t_mat))
    curve_ok = bool(np.all(gap >= -1e-12) and abs(gap[touch][0]) < 1e-10
                    and np.all(gap[~touch] > 0))
    report(7, budget_ok and success_ok and curve_ok,
           f"budget={budget.value:.4f}±{budget.stderr:.4f} (target {w0}); "
           f"success={freq.value:.5f} vs closed {res.success_prob:.5f}; "
           f"figure-2 dominance with a single 1e-10 touch: "
           f"{'ok' if curve_ok else 'FAIL'}")
    assert budget_ok and success_ok and curve_ok


def test_criterion_8_market_sanity_and_determinism(params):
    """E[xi] and E[xi S] within 3 stderr at 1e6 paths; worker-count invariance."""
    cfg = mc.SimConfig(n_paths=1_000_000, steps_per_year=4, seed=SEED + 6)
    table = mc.simulate(cfg, params)
    bond = mc.estimate_mean(table.xi, cfg)
    mart = mc.estimate_mean(table.xi * table.s_terminal, cfg)
    bond_ok = abs(bond.value - np.exp(-params.r * params.t_mat)) <= 3 * bond.stderr
    mart_ok = abs(mart.value - params.s0) <= 3 * mart.stderr

    cfg1 = mc.SimConfig(n_paths=1_000_000, steps_per_year=4, seed=SEED + 6, workers=1)
    cfg3 = mc.SimConfig(n_paths=1_000_000, steps_per_year=4, seed=SEED + 6, workers=3)
    t1 = mc.simulate(cfg1, params)
    t3 = mc.simulate(cfg3, params)
    det_ok = (np.array_equal(t1.s_terminal, t3.s_terminal)
              and np.array_equal(t1.xi, t3.xi)
              and mc.estimate_mean(t1.xi, cfg1).value
              == mc.estimate_mean(t3.xi, cfg3).value)
    report(8, bond_ok and mart_ok and det_ok,
           f"E[xi]={bond.value:.6f} (target {np.exp(-0.02):.6f}); "
           f"E[xi S]={mart.value:.4f} (target 100); "
           f"bitwise determinism across workers: {'ok' if det_ok else 'FAIL'}")
    assert bond_ok and mart_ok and det_ok
