"""Command-line front door: price instruments, build payoffs, reproduce tables.

Exit codes: 0 on success, 1 when a reproduction check misses its tolerance,
2 on usage or validation errors.  Every run prints a provenance line (the
parameters, seed and method behind each number) before its table; files are
written as RFC-4180 CSV with a header row, or as JSON mirroring the CSV
columns one-to-one with numbers at 12 significant digits.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import asian, mc, target_prob, twins
from .copulas import gaussian_copula
from .cost_efficiency import (
    cost_efficient_payoff,
    power_put_payoff,
    power_put_price,
    put_payoff_distribution,
)
from .dependence import intermediate_benchmark
from .distributions import EmpiricalDist, LognormalDist
from .eut import (
    admissible_rho_grid,
    constrained_crra_payoff,
    constrained_eut_optimum,
    crra_utility,
    expected_utility_curve,
    merton_crra_payoff,
)
from .market import MarketParams, geometric_average_joint
from .payoffs import (
    bond,
    european_call,
    european_put,
    payoff_from_table,
    read_payoff_table,
    write_payoff_table,
)
from .pricing import bs_call_price, bs_put_price, grid_price_terminal, quad_price_terminal
from .twins import asian_twin_correlation, asian_twin_exponents

_PAPER_SET = dict(mu=0.06, r=0.02, sigma=0.3, s0=100.0, T=1.0)
_DEFAULT_SEED = 20240613


def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _market_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mu", type=float, default=_PAPER_SET["mu"])
    p.add_argument("--r", type=float, default=_PAPER_SET["r"])
    p.add_argument("--sigma", type=float, default=_PAPER_SET["sigma"])
    p.add_argument("--s0", type=float, default=_PAPER_SET["s0"])
    p.add_argument("--T", type=float, default=_PAPER_SET["T"], dest="t_mat")


def _sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--paths", type=int, default=200_000)
    p.add_argument("--steps", type=int, default=252)
    p.add_argument("--seed", type=int,
                   default=int(os.environ.get("PAYOFFOPT_SEED", _DEFAULT_SEED)))


def _out_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=str, default=None, help="output file or directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _params(ns) -> MarketParams:
    return MarketParams(mu=ns.mu, r=ns.r, sigma=ns.sigma, s0=ns.s0, t_mat=ns.t_mat)


def _config(ns, measure: str = "P") -> mc.SimConfig:
    return mc.SimConfig(n_paths=ns.paths, steps_per_year=ns.steps, seed=ns.seed,
                        measure=measure)


def _provenance(ns, extra=None) -> None:
    info = {
        "mu": ns.mu, "r": ns.r, "sigma": ns.sigma, "s0": ns.s0, "T": ns.t_mat,
        "paths": getattr(ns, "paths", None), "steps": getattr(ns, "steps", None),
        "seed": getattr(ns, "seed", None),
    }
    if extra:
        info.update(extra)
    print("# provenance " + json.dumps(info, sort_keys=True))


def _emit(rows: list[dict], path: str | None, fmt: str, default_name: str) -> None:
    """Print a table and optionally write it as CSV or JSON."""
    if not rows:
        return
    header = list(rows[0].keys())
    formatted = [
        {k: (_fmt(v) if isinstance(v, (int, float, np.floating)) else str(v))
         for k, v in row.items()}
        for row in rows
    ]
    widths = [max(len(h), *(len(r[h]) for r in formatted)) for h in header]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for r in formatted:
        print("  ".join(r[h].ljust(w) for h, w in zip(header, widths)))
    if path is None:
        return
    if os.path.isdir(path):
        path = os.path.join(path, default_name + ("." + fmt))
    if fmt == "csv":
        import csv as _csv

        with open(path, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(header)
            for r in formatted:
                writer.writerow([r[h] for h in header])
    else:
        with open(path, "w") as fh:
            json.dump(formatted, fh, indent=1)
    print(f"# wrote {path}")


def read_csv(path: str) -> list[dict]:
    """Reader for the CLI's own CSV output (round-trip contract)."""
    import csv as _csv

    with open(path, newline="") as fh:
        return list(_csv.DictReader(fh))


# ---------------------------------------------------------------------------
# price
# ---------------------------------------------------------------------------

_INSTRUMENTS = ("european-call", "european-put", "geo-asian-fixed",
                "geo-asian-floating", "power-call", "bond", "custom")


def _cmd_price(ns) -> int:
    params = _params(ns)
    T = params.t_mat
    rows: list[dict] = []

    def add(label, closed=None, quadrature=None, q_err=None, payoff=None):
        mc_val = mc_err = None
        if payoff is not None:
            est = mc.price(payoff, _config(ns), params)
            mc_val, mc_err = est.value, est.stderr
        rows.append({
            "instrument": label,
            "closed_form": "" if closed is None else closed,
            "quadrature": "" if quadrature is None else quadrature,
            "monte_carlo": "" if mc_val is None else mc_val,
            "mc_stderr": "" if mc_err is None else mc_err,
        })

    name = ns.instrument
    if name in ("european-call", "european-put", "power-call", "geo-asian-fixed") \
            and ns.strike is None:
        print(f"error: {name} requires --strike", file=sys.stderr)
        return 2
    _provenance(ns, {"instrument": name})
    if name == "bond":
        pay = bond(T, notional=ns.notional)
        add("bond", closed=ns.notional * np.exp(-params.r * T), payoff=pay)
    elif name == "european-call":
        pay = european_call(ns.strike, T)
        q = quad_price_terminal(pay.fn, params, kinks=(ns.strike,))
        add(pay.label, closed=bs_call_price(params, ns.strike).value,
            quadrature=q.value, payoff=pay)
    elif name == "european-put":
        pay = european_put(ns.strike, T)
        q = quad_price_terminal(pay.fn, params, kinks=(ns.strike,))
        add(pay.label, closed=bs_put_price(params, ns.strike).value,
            quadrature=q.value, payoff=pay)
    elif name == "power-call":
        pay = asian.cost_efficient_fixed_strike_payoff(params, ns.strike)
        q = asian.price_cost_efficient_fixed_strike(params, ns.strike)
        add(pay.label, closed=q.value,
            quadrature=quad_price_terminal(pay.fn, params).value, payoff=pay)
    elif name == "geo-asian-fixed":
        pay = asian.fixed_strike_call_payoff(params, ns.strike)
        add(pay.label, closed=asian.price_kemna_vorst(params, ns.strike).value,
            quadrature=asian.quad_price_kemna_vorst(params, ns.strike).value,
            payoff=pay)
    elif name == "geo-asian-floating":
        pay = asian.floating_put_payoff(params)
        add(pay.label, closed=asian.price_floating_asian_put(params).value,
            quadrature=asian.quad_price_floating_asian_put(params).value,
            payoff=pay)
    elif name == "custom":
        if ns.table is None:
            print("error: custom requires --table payoff.csv", file=sys.stderr)
            return 2
        s, v = read_payoff_table(ns.table)
        pay = payoff_from_table(s, v, T)
        add("custom", quadrature=grid_price_terminal(pay.fn, params), payoff=pay)
    _emit(rows, ns.out, ns.format, f"price-{name}")
    return 0


# ---------------------------------------------------------------------------
# cost-efficient / twin / eut / target-prob
# ---------------------------------------------------------------------------


def _cmd_cost_efficient(ns) -> int:
    params = _params(ns)
    _provenance(ns, {"target": ns.target})
    if ns.target == "put":
        target = put_payoff_distribution(params, ns.strike)
    elif ns.target == "geo-average":
        joint = geometric_average_joint(params)
        target = LognormalDist(joint.mean1, joint.sd1)
    else:
        target = EmpiricalDist.from_csv(ns.target)
    pay = cost_efficient_payoff(target, params)
    s_grid = np.exp(np.linspace(np.log(params.s0 / 8), np.log(params.s0 * 8), ns.grid))
    rows = [{"s": s, "payoff": v} for s, v in zip(s_grid, pay(s_grid))]
    price = grid_price_terminal(pay.fn, params)
    print(f"# cost-efficient price (quadrature): {_fmt(price)}")
    if ns.target == "put":
        print(f"# power-put closed form: {_fmt(power_put_price(params, ns.strike).value)}")
        print(f"# ordinary put closed form: {_fmt(bs_put_price(params, ns.strike).value)}")
    _emit(rows, ns.out, ns.format, "cost-efficient")
    return 0


def _cmd_twin(ns) -> int:
    params = _params(ns)
    _provenance(ns, {"t": ns.t})
    tw = asian_twin_exponents(params, ns.t)
    rows = [{
        "t": ns.t,
        "coefficient": tw.coef,
        "exponent_s_t": tw.exp_st,
        "exponent_s_T": tw.exp_sT,
        "log_correlation_with_average": asian_twin_correlation(params, ns.t),
    }]
    _emit(rows, ns.out, ns.format, "twin")
    return 0


def _cmd_eut(ns) -> int:
    params = _params(ns)
    _provenance(ns, {"eta": ns.eta, "rho": ns.rho, "t": ns.t, "w0": ns.w0})
    utility = crra_utility(ns.eta)
    res = constrained_eut_optimum(utility, ns.w0, intermediate_benchmark(ns.t),
                                  gaussian_copula(ns.rho), params)
    closed = constrained_crra_payoff(params, ns.eta, ns.w0, ns.rho, ns.t)
    unconstrained = merton_crra_payoff(params, ns.eta, ns.w0)
    qs = np.linspace(0.05, 0.95, ns.grid)
    from scipy.stats import norm as _norm

    s_t = params.s0 * np.exp(params.log_drift(ns.t)
                             + params.sigma * np.sqrt(ns.t) * _norm.ppf(qs))
    s_T = params.s0 * np.exp(params.log_drift(params.t_mat)
                             + params.sigma * np.sqrt(params.t_mat) * _norm.ppf(qs))
    rows = []
    for a, b in zip(s_t, s_T):
        rows.append({
            "s_t": a, "s_T": b,
            "constrained": float(res.payoff(np.array([a]), np.array([b]))[0]),
            "constrained_closed_form": float(closed(np.array([a]), np.array([b]))[0]),
            "unconstrained": float(unconstrained(np.array([b]))[0]),
        })
    _emit(rows, ns.out, ns.format, "eut")
    return 0


def _cmd_target_prob(ns) -> int:
    params = _params(ns)
    _provenance(ns, {"b": ns.b, "w0": ns.w0, "rho": ns.rho, "t": ns.t})
    rows = []
    try:
        unc = target_prob.browne_optimum(target_prob.TargetProblem(w0=ns.w0, b=ns.b), params)
    except target_prob.TrivialTargetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rows.append({"strategy": "unconstrained", "threshold": unc.threshold,
                 "success_prob": unc.success_prob,
                 "expected_payoff": ns.b * unc.success_prob})
    if ns.rho is not None:
        con = target_prob.benchmark_constrained_optimum(
            target_prob.TargetProblem(w0=ns.w0, b=ns.b,
                                      benchmark=intermediate_benchmark(ns.t),
                                      copula=gaussian_copula(ns.rho)), params)
        rows.append({"strategy": f"constrained(rho={ns.rho:g})",
                     "threshold": con.price_threshold,
                     "success_prob": con.success_prob,
                     "expected_payoff": con.expected_payoff})
    _emit(rows, ns.out, ns.format, "target-prob")
    return 0


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------

_TARGETS = ("asian", "figure1", "figure2", "put-example", "correlation")


def _check(label: str, ok: bool, detail: str, failures: list) -> None:
    print(f"# CHECK {'PASS' if ok else 'FAIL'}: {label} ({detail})")
    if not ok:
        failures.append(label)


def _reproduce_asian(ns, failures: list) -> list[dict]:
    params = _params(ns)
    config = _config(ns)
    table = mc.simulate(config, params, times=(), want_average=True)
    rows = []

    def mc_est(payoff):
        vals = mc.evaluate_payoff(payoff, table)
        return mc.estimate_mean(table.xi * vals, config)

    entries = [
        ("fixed-strike-cost-efficient",
         asian.price_cost_efficient_fixed_strike(params, ns.strike).value,
         quad_price_terminal(
             asian.cost_efficient_fixed_strike_payoff(params, ns.strike).fn, params).value,
         mc_est(asian.cost_efficient_fixed_strike_payoff(params, ns.strike))),
        ("geo-asian-fixed",
         asian.price_kemna_vorst(params, ns.strike).value,
         asian.quad_price_kemna_vorst(params, ns.strike).value,
         mc_est(asian.fixed_strike_call_payoff(params, ns.strike))),
        ("geo-asian-floating-put",
         asian.price_floating_asian_put(params).value,
         asian.quad_price_floating_asian_put(params).value,
         mc_est(asian.floating_put_payoff(params))),
        ("cheapest-floating-twin",
         asian.price_cheapest_floating_twin(params).value,
         asian.quad_price_cheapest_floating_twin(params).value,
         mc_est(asian.cheapest_floating_twin_payoff(params))),
    ]
    for label, closed, quadrature, est in entries:
        rows.append({"instrument": label, "closed_form": closed,
                     "quadrature": quadrature, "monte_carlo": est.value,
                     "mc_stderr": est.stderr})
        _check(f"{label}: MC within 3 stderr of closed form",
               abs(est.value - closed) <= 3 * est.stderr,
               f"closed={closed:.6f} mc={est.value:.6f} se={est.stderr:.6f}", failures)
        _check(f"{label}: quadrature within 1e-6 relative of closed form",
               abs(quadrature - closed) <= 1e-6 * max(abs(closed), 1.0),
               f"closed={closed:.10f} quad={quadrature:.10f}", failures)
    flt = dict(zip([e[0] for e in entries], entries))
    _check("floating put equals reference 6.74 within 0.005",
           abs(flt["geo-asian-floating-put"][1] - asian.REFERENCE_FLOATING_PUT)
           <= asian.REFERENCE_TOLERANCE,
           f"closed={flt['geo-asian-floating-put'][1]:.4f} reference=6.74", failures)
    _check("cheapest twin equals reference 5.86 within 0.005",
           abs(flt["cheapest-floating-twin"][1] - asian.REFERENCE_CHEAPEST_TWIN)
           <= asian.REFERENCE_TOLERANCE,
           f"closed={flt['cheapest-floating-twin'][1]:.4f} reference=5.86", failures)
    return rows


def _reproduce_correlation(ns, failures: list) -> list[dict]:
    params = _params(ns)
    T = params.t_mat
    t_grid = np.unique(np.concatenate([np.linspace(0.05 * T, 0.95 * T, 19), [T / 2]]))
    joint = twins.geometric_average_joint_spec(params)
    scan = twins.best_twin_by_correlation(joint, None, t_grid, params, method="closed-form")
    rho_max_expected = 0.75 + np.sqrt(3.0) / 8.0
    _check("optimal twin date is T/2", np.isclose(scan.t_star, T / 2),
           f"t*={scan.t_star:g}", failures)
    _check("maximal log-correlation within 1e-4 of 3/4 + sqrt(3)/8",
           abs(scan.rho_star - rho_max_expected) <= 1e-4,
           f"rho*={scan.rho_star:.6f} expected={rho_max_expected:.6f}", failures)
    return [{"t": t, "log_correlation": r} for t, r in zip(scan.t_grid, scan.rho)]


def _reproduce_figure1(ns, failures: list) -> list[dict]:
    params = _params(ns)
    t = params.t_mat / 2
    curve = expected_utility_curve(params, ns.eta, ns.w0, t,
                                   admissible_rho_grid(t, params.t_mat))
    gap = curve[:, 2] - curve[:, 1]
    _check("constrained expected utility never exceeds unconstrained",
           bool(np.all(gap >= -1e-12)), f"min gap={gap.min():.3e}", failures)
    touch = np.sqrt(t / params.t_mat)
    at = np.isclose(curve[:, 0], touch)
    _check("curves touch at rho = sqrt(t/T) within 1e-10",
           bool(at.any() and np.all(np.abs(gap[at]) < 1e-10)),
           f"gap at touch={gap[at][0] if at.any() else np.nan:.3e}", failures)
    return [{"rho": r, "eu_constrained": c, "eu_unconstrained": u} for r, c, u in curve]


def _reproduce_figure2(ns, failures: list) -> list[dict]:
    params = _params(ns)
    t = params.t_mat / 2
    curve = target_prob.figure2_curve(params, ns.w0, ns.b, t,
                                      admissible_rho_grid(t, params.t_mat))
    gap = curve[:, 2] - curve[:, 1]
    _check("constrained expected payoff never exceeds unconstrained",
           bool(np.all(gap >= -1e-12)), f"min gap={gap.min():.3e}", failures)
    touch = np.sqrt(t / params.t_mat)
    at = np.isclose(curve[:, 0], touch)
    _check("curves touch at rho = sqrt(t/T) within 1e-10",
           bool(at.any() and np.all(np.abs(gap[at]) < 1e-10)),
           f"gap at touch={gap[at][0] if at.any() else np.nan:.3e}", failures)
    return [{"rho": r, "expected_constrained": c, "expected_unconstrained": u}
            for r, c, u in curve]


def _reproduce_put_example(ns, failures: list) -> list[dict]:
    params = _params(ns)
    K = ns.strike
    config = mc.SimConfig(n_paths=ns.paths, steps_per_year=2, seed=ns.seed)
    table = mc.simulate(config, params, times=())
    rows = []
    put = european_put(K, params.t_mat)
    ppay = power_put_payoff(params, K)
    ests = {}
    for label, pay, closed in (
        ("ordinary-put", put, bs_put_price(params, K).value),
        ("power-put", ppay, power_put_price(params, K).value),
    ):
        vals = mc.evaluate_payoff(pay, table)
        est = mc.estimate_mean(table.xi * vals, config)
        ests[label] = (est, closed)
        rows.append({"instrument": label, "closed_form": closed,
                     "quadrature": grid_price_terminal(pay.fn, params),
                     "monte_carlo": est.value, "mc_stderr": est.stderr})
        _check(f"{label}: MC within 3 stderr of closed form",
               abs(est.value - closed) <= 3 * est.stderr,
               f"closed={closed:.6f} mc={est.value:.6f}", failures)
    _check("power put strictly cheaper than ordinary put",
           ests["power-put"][1] < ests["ordinary-put"][1],
           f"{ests['power-put'][1]:.4f} < {ests['ordinary-put'][1]:.4f}", failures)
    return rows


def _cmd_reproduce(ns) -> int:
    failures: list[str] = []
    _provenance(ns, {"target": ns.target})
    if ns.target == "asian":
        rows = _reproduce_asian(ns, failures)
    elif ns.target == "correlation":
        rows = _reproduce_correlation(ns, failures)
    elif ns.target == "figure1":
        rows = _reproduce_figure1(ns, failures)
    elif ns.target == "figure2":
        rows = _reproduce_figure2(ns, failures)
    else:
        rows = _reproduce_put_example(ns, failures)
    _emit(rows, ns.out, ns.format, f"reproduce-{ns.target}")
    if failures:
        print(f"# {len(failures)} check(s) FAILED", file=sys.stderr)
        return 1
    print("# all checks passed")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="payoffopt",
        description="Construct, price and verify optimal payoffs in a "
                    "Black-Scholes market.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price a named instrument or a payoff table")
    p.add_argument("instrument", choices=_INSTRUMENTS)
    p.add_argument("--strike", type=float, default=None)
    p.add_argument("--notional", type=float, default=1.0)
    p.add_argument("--table", type=str, default=None, help="CSV s,payoff for custom")
    _market_args(p); _sim_args(p); _out_args(p)
    p.set_defaults(func=_cmd_price)

    p = sub.add_parser("cost-efficient", help="cheapest payoff for a target law")
    p.add_argument("--target", type=str, default="put",
                   help="'put', 'geo-average', or a value,cdf CSV path")
    p.add_argument("--strike", type=float, default=100.0)
    p.add_argument("--grid", type=int, default=201)
    _market_args(p); _sim_args(p); _out_args(p)
    p.set_defaults(func=_cmd_cost_efficient)

    p = sub.add_parser("twin", help="log-linear twin of the geometric average")
    p.add_argument("--t", type=float, default=0.5)
    _market_args(p); _sim_args(p); _out_args(p)
    p.set_defaults(func=_cmd_twin)

    p = sub.add_parser("eut", help="dependence-constrained expected-utility optimum")
    p.add_argument("--eta", type=float, default=2.0)
    p.add_argument("--rho", type=float, default=0.3)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--w0", type=float, default=100.0)
    p.add_argument("--grid", type=int, default=9)
    _market_args(p); _sim_args(p); _out_args(p)
    p.set_defaults(func=_cmd_eut)

    p = sub.add_parser("target-prob", help="target-probability digital optima")
    p.add_argument("--b", type=float, default=106.0)
    p.add_argument("--w0", type=float, default=100.0)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--t", type=float, default=0.5)
    _market_args(p); _sim_args(p); _out_args(p)
    p.set_defaults(func=_cmd_target_prob)

    p = sub.add_parser("reproduce", help="rebuild the reference tables and check them")
    p.add_argument("target", choices=_TARGETS)
    p.add_argument("--eta", type=float, default=1.0, help="risk aversion for figure1")
    p.add_argument("--w0", type=float, default=100.0)
    p.add_argument("--b", type=float, default=106.0)
    p.add_argument("--strike", type=float, default=100.0)
    _market_args(p)
    p.add_argument("--paths", type=int, default=1_000_000)
    p.add_argument("--steps", type=int, default=252)
    p.add_argument("--seed", type=int,
                   default=int(os.environ.get("PAYOFFOPT_SEED", _DEFAULT_SEED)))
    _out_args(p)
    p.set_defaults(func=_cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
