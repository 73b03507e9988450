"""Optimal payoff design under law-invariant and state-dependent preferences.

A numpy/scipy library for a Black-Scholes market: cost-efficient payoffs and
their price-matched families, conditional-quantile twins with a benchmark,
dependence-constrained expected-utility optima via isotonic projection,
target-probability digitals, closed-form geometric-Asian prices, and an
independent Monte Carlo oracle that cross-checks all of it.
"""
from .market import (
    MarketParams,
    StatePriceCoeffs,
    NormalLaw,
    BiLognormalLaw,
    cdf_sT,
    quantile_sT,
    state_price_density,
    conditional_law,
    geometric_average_joint,
    pair_joint_sT_st,
)
from .distributions import (
    Dist1D,
    LognormalDist,
    GaussianDist,
    DegenerateDist,
    EmpiricalDist,
    quantile,
)
from .copulas import (
    CopulaSpec,
    gaussian_copula,
    frechet_upper,
    frechet_lower,
    independence_copula,
    gaussian_copula_conditional,
    rosenblatt_uniform,
    frechet_bounds_check,
)
from .dependence import (
    Benchmark,
    terminal_benchmark,
    intermediate_benchmark,
    geometric_benchmark,
    external_benchmark,
    z_transform,
    admissible_rho_interval,
    effective_corr_horizon,
)
from .payoffs import (
    PayoffFn,
    terminal_payoff,
    two_point_payoff,
    average_payoff,
    average_terminal_payoff,
    bond,
    european_call,
    european_put,
    payoff_from_table,
)
from .pricing import PriceQuote, bs_call_price, bs_put_price, quad_price_terminal, grid_price_terminal
from .mc import SimConfig, MCEstimate, SampleTable, simulate, price, joint_law_distance
from .cost_efficiency import (
    cost_efficient_payoff,
    most_expensive_payoff,
    payoff_at_price,
    strict_improvement,
    is_cost_efficient,
    put_payoff_distribution,
    power_put_payoff,
    power_put_price,
    PriceNotAttainableError,
)
from .twins import (
    JointSpec,
    fixed_strike_asian_joint,
    geometric_average_joint_spec,
    floating_put_terminal_joint,
    floating_put_geometric_joint,
    joint_from_samples,
    twin_with_sT_benchmark,
    cheapest_twin,
    most_expensive_twin,
    twin_at_price,
    asian_twin_exponents,
    asian_twin_correlation,
    best_twin_by_correlation,
    is_cheapest_twin,
)
from .asian import (
    price_cost_efficient_fixed_strike,
    price_kemna_vorst,
    price_floating_asian_put,
    price_cheapest_floating_twin,
)
from .isotonic import IsotonicFit, isotonic_project, pava_nonincreasing
from .eut import (
    UtilitySpec,
    crra_utility,
    custom_utility,
    merton_optimum,
    constrained_eut_optimum,
    conditional_expectation_xi_given_z,
    expected_utility,
    merton_crra_payoff,
    constrained_crra_payoff,
    eu_merton_crra,
    eu_constrained_crra,
    expected_utility_curve,
    BudgetNotAttainableError,
)
from .target_prob import (
    TargetProblem,
    TrivialTargetError,
    browne_optimum,
    random_target_optimum,
    benchmark_constrained_optimum,
    expected_payoff_unconstrained,
    expected_payoff_constrained,
    figure2_curve,
)

__version__ = "0.1.0"
