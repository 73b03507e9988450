import numpy as np
import pytest
from scipy.stats import norm, spearmanr

from payoffopt import (
    CopulaSpec,
    frechet_bounds_check,
    frechet_lower,
    frechet_upper,
    gaussian_copula,
    gaussian_copula_conditional,
    independence_copula,
    rosenblatt_uniform,
)
from payoffopt import mc
from payoffopt.market import conditional_law, geometric_average_joint, pair_joint_sT_st

KS_1PCT = np.sqrt(-0.5 * np.log(0.005))  # asymptotic one-sample 1% critical constant


def test_copula_spec_validation():
    with pytest.raises(ValueError):
        CopulaSpec(kind="gauss")
    with pytest.raises(ValueError):
        gaussian_copula(1.0)
    with pytest.raises(ValueError) as exc:
        gaussian_copula_conditional(-1.0, 0.5)
    assert "frechet" in str(exc.value)
    with pytest.raises(ValueError):
        CopulaSpec(kind="independence", rho=0.3)


def test_gaussian_conditional_independence_limit():
    xs = np.linspace(0.01, 0.99, 99)
    d = gaussian_copula_conditional(0.0, v=0.37)
    assert np.allclose(d.cdf(xs), xs, atol=1e-14)
    assert np.allclose(d.ppf(xs), xs, atol=1e-14)


def test_gaussian_conditional_inversion_identity():
    # identity to 1e-10 wherever the probit composition stays well
    # conditioned (the intermediate score in the Gaussian bulk); extreme
    # (rho, x, v) corners saturate double precision by construction
    xs = np.linspace(0.05, 0.95, 19)
    for rho in (-0.6, -0.2, 0.45, 0.6):
        for v in (0.1, 0.5, 0.77):
            d = gaussian_copula_conditional(rho, v)
            assert np.max(np.abs(d.cdf(d.ppf(xs)) - xs)) < 1e-10
            assert np.max(np.abs(d.ppf(d.cdf(xs)) - xs)) < 1e-10
    xs_tight = np.linspace(0.2, 0.8, 13)
    for rho in (-0.9, 0.9):
        d = gaussian_copula_conditional(rho, 0.5)
        assert np.max(np.abs(d.ppf(d.cdf(xs_tight)) - xs_tight)) < 1e-10


def test_conditional_is_valid_cdf():
    xs = np.linspace(1e-6, 1 - 1e-6, 500)
    for spec in (gaussian_copula(0.6), independence_copula()):
        for v in (0.05, 0.5, 0.95):
            vals = spec.conditional_cdf(xs, v)
            assert np.all(np.diff(vals) >= 0)
            assert vals[0] < 1e-3 and vals[-1] > 1 - 1e-3


def test_frechet_conditionals_are_degenerate():
    assert frechet_upper().conditional_ppf(0.3, 0.8) == 0.8
    assert frechet_lower().conditional_ppf(0.3, 0.8) == pytest.approx(0.2)


def test_gaussian_sampling_rank_correlation():
    # pairs (V, C^{-1}_{1|V}(U)) carry the Gaussian copula; the Spearman
    # rank correlation maps back to rho through 2 sin(pi rho_s / 6)
    rng = np.random.default_rng(17)
    n = 100_000
    rho = 0.55
    v = rng.uniform(size=n)
    u = rng.uniform(size=n)
    x = gaussian_copula(rho).conditional_ppf(u, v)
    rho_s = spearmanr(v, x).statistic
    rho_hat = 2.0 * np.sin(np.pi * rho_s / 6.0)
    assert abs(rho_hat - rho) < 6.0 / np.sqrt(n)  # 3 x conservative stderr bound


def test_rosenblatt_independent_case():
    # Y independent of X: V reduces to the marginal cdf of Y
    cond = lambda x, y: norm.cdf(y)
    assert rosenblatt_uniform(cond, 123.0, 0.7) == pytest.approx(norm.cdf(0.7))


def _st_sT_conditional(params):
    joint = pair_joint_sT_st(params, 0.5)

    def cond(s_T, s_t):
        law = conditional_law(joint, given_coord=1, given_value=np.log(s_T))
        return norm.cdf((np.log(s_t) - law.mean) / law.sd)

    return cond


def test_rosenblatt_uniform_and_independent(params):
    cfg = mc.SimConfig(n_paths=100_000, steps_per_year=4, seed=55)
    table = mc.simulate(cfg, params, times=(0.5,))
    cond = _st_sT_conditional(params)
    v = rosenblatt_uniform(cond, table.s_terminal, table.s[0.5])
    n = v.size
    # uniformity: one-sample KS below the 1% critical value
    ks = np.max(np.abs(np.sort(v) - (np.arange(1, n + 1) - 0.5) / n))
    assert ks < KS_1PCT / np.sqrt(n)
    # independence of the conditioning variable
    assert abs(np.corrcoef(v, np.log(table.s_terminal))[0, 1]) < 3.0 / np.sqrt(n)
    # increasing in y for fixed x
    s_grid = np.linspace(60.0, 150.0, 50)
    vals = cond(np.full_like(s_grid, 110.0), s_grid)
    assert np.all(np.diff(vals) > 0)


def test_rosenblatt_reconstruction_matches_joint_law(params):
    # F^{-1}_{G|S_T}(V) built from (S_t, S_T) reproduces the law of (S_T, G_T)
    cfg = mc.SimConfig(n_paths=100_000, steps_per_year=252, seed=56)
    table = mc.simulate(cfg, params, times=(0.5,), want_average=True)
    cond = _st_sT_conditional(params)
    v = rosenblatt_uniform(cond, table.s_terminal, table.s[0.5])
    g_joint = geometric_average_joint(params)
    law = conditional_law(g_joint, given_coord=1, given_value=np.log(table.s_terminal))
    g_built = np.exp(law.mean + law.sd * norm.ppf(np.clip(v, 1e-15, 1 - 1e-15)))
    cfg2 = mc.SimConfig(n_paths=100_000, steps_per_year=252, seed=57)
    table2 = mc.simulate(cfg2, params, want_average=True)
    dist = mc.joint_law_distance(
        np.column_stack([table.s_terminal, g_built]),
        np.column_stack([table2.s_terminal, table2.g]),
    )
    assert dist.statistic < 0.01


def test_frechet_bounds_exact_cases():
    rng = np.random.default_rng(11)
    x = rng.exponential(size=4000)
    res = frechet_bounds_check(x, x)
    assert res.e_xy == pytest.approx(res.upper, rel=1e-12)
    res2 = frechet_bounds_check(x, -x)
    assert res2.e_xy == pytest.approx(res2.lower, rel=1e-12)
    slack = 1e-12 * max(abs(res2.lower), abs(res2.upper))  # summation order
    assert res2.lower - slack <= res2.e_xy <= res2.upper + slack


def test_frechet_bounds_bracket_asian_pair(params):
    cfg = mc.SimConfig(n_paths=50_000, steps_per_year=252, seed=12)
    table = mc.simulate(cfg, params, want_average=True)
    res = frechet_bounds_check(table.s_terminal, table.g)
    assert res.lower < res.e_xy < res.upper


def test_frechet_bounds_validation():
    with pytest.raises(ValueError):
        frechet_bounds_check([], [])
    with pytest.raises(ValueError):
        frechet_bounds_check([1.0, 2.0], [1.0])
