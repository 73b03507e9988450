import numpy as np
import pytest
from scipy.stats import norm

from payoffopt import (
    admissible_rho_interval,
    frechet_lower,
    frechet_upper,
    gaussian_copula,
    geometric_benchmark,
    independence_copula,
    intermediate_benchmark,
    terminal_benchmark,
)
from payoffopt import mc
from payoffopt.dependence import check_admissible_rho, effective_corr_horizon, z_transform

KS_1PCT = np.sqrt(-0.5 * np.log(0.005))


def _w_samples(zmap, table):
    obs = [table.s[t] for t in zmap.times]
    if zmap.uses_average:
        obs.append(table.g)
    return zmap.w_fn(*obs)


@pytest.mark.parametrize("benchmark,copula", [
    ("intermediate", gaussian_copula(0.3)),
    ("intermediate", independence_copula()),
    ("intermediate", frechet_upper()),
    ("geometric", gaussian_copula(-0.2)),
    ("terminal", frechet_upper()),
    ("terminal", frechet_lower()),
])
def test_z_is_uniform(params, benchmark, copula):
    bench = {"intermediate": intermediate_benchmark(0.5),
             "geometric": geometric_benchmark(),
             "terminal": terminal_benchmark()}[benchmark]
    zmap = z_transform(bench, copula, params)
    cfg = mc.SimConfig(n_paths=60_000, steps_per_year=252, seed=21)
    table = mc.simulate(cfg, params, times=zmap.times, want_average=zmap.uses_average)
    z = norm.cdf(_w_samples(zmap, table))
    n = z.size
    ks = np.max(np.abs(np.sort(z) - (np.arange(1, n + 1) - 0.5) / n))
    assert ks < KS_1PCT / np.sqrt(n)


def test_z_carries_the_target_copula(params):
    # (Z, A) under a Gaussian(rho) constraint has normal scores with corr rho
    rho = 0.45
    bench = intermediate_benchmark(0.5)
    zmap = z_transform(bench, gaussian_copula(rho), params)
    cfg = mc.SimConfig(n_paths=200_000, steps_per_year=4, seed=23)
    table = mc.simulate(cfg, params, times=zmap.times)
    w = _w_samples(zmap, table)
    score_a = (np.log(table.s[0.5] / params.s0) - params.log_drift(0.5)) / (
        params.sigma * np.sqrt(0.5))
    est = np.corrcoef(w, score_a)[0, 1]
    assert abs(est - rho) < 3.0 / np.sqrt(w.size)


def test_terminal_benchmark_rejects_absolutely_continuous_copulas(params):
    with pytest.raises(ValueError):
        z_transform(terminal_benchmark(), gaussian_copula(0.5), params)
    with pytest.raises(ValueError):
        z_transform(terminal_benchmark(), independence_copula(), params)


def test_admissible_interval_and_rejection(params):
    lo, hi = admissible_rho_interval(0.5, 1.0)
    assert np.isclose(lo, -np.sqrt(0.5)) and hi == 1.0
    with pytest.raises(ValueError):
        check_admissible_rho(gaussian_copula(-0.9), intermediate_benchmark(0.5), params)
    # boundary is admissible
    check_admissible_rho(gaussian_copula(lo), intermediate_benchmark(0.5), params)


def test_effective_horizon_closed_values(params):
    T, t = params.t_mat, 0.5
    assert effective_corr_horizon(terminal_benchmark(), frechet_upper(), params) == pytest.approx(np.sqrt(T))
    assert effective_corr_horizon(terminal_benchmark(), frechet_lower(), params) == pytest.approx(-np.sqrt(T))
    assert effective_corr_horizon(intermediate_benchmark(t), frechet_upper(), params) == pytest.approx(np.sqrt(t))
    assert effective_corr_horizon(intermediate_benchmark(t), independence_copula(), params) == pytest.approx(np.sqrt(T - t))
    rho = 0.3
    assert effective_corr_horizon(intermediate_benchmark(t), gaussian_copula(rho), params) \
        == pytest.approx(rho * np.sqrt(t) + np.sqrt((1 - rho**2) * (T - t)))
    # geometric benchmark: corr(ln S_T, ln G_T) = sqrt(3)/2
    assert effective_corr_horizon(geometric_benchmark(), frechet_upper(), params) \
        == pytest.approx(np.sqrt(T) * np.sqrt(3) / 2)


@pytest.mark.parametrize("bench,copula", [
    (intermediate_benchmark(0.5), gaussian_copula(0.3)),
    (geometric_benchmark(), gaussian_copula(-0.2)),
])
def test_effective_horizon_matches_mc_regression(params, bench, copula):
    # E[xi | w] = delta e^{-theta c w}: the bin-regression slope of ln E[xi|w]
    # against w recovers -theta c
    c = effective_corr_horizon(bench, copula, params)
    zmap = z_transform(bench, copula, params)
    cfg = mc.SimConfig(n_paths=400_000, steps_per_year=126, seed=31)
    table = mc.simulate(cfg, params, times=zmap.times, want_average=zmap.uses_average)
    w = _w_samples(zmap, table)
    order = np.argsort(w)
    chunks = np.array_split(order, 40)
    w_c = np.array([w[i].mean() for i in chunks])
    xi_c = np.array([table.xi[i].mean() for i in chunks])
    slope = np.polyfit(w_c, np.log(xi_c), 1)[0]
    assert abs(slope - (-params.theta * c)) < 0.01
