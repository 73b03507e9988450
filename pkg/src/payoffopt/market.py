"""Black-Scholes market primitives.

Under the physical measure the risky asset follows

    dS_t / S_t = mu dt + sigma dZ_t,
    S_t = S0 exp((mu - sigma^2/2) t + sigma Z_t),

so S_T is lognormal with cdf

    F_{S_T}(x) = Phi((ln(x/S0) - (mu - sigma^2/2) T) / (sigma sqrt(T))).

Payoffs are priced by c0(X) = E[xi_T X] against the state-price density

    xi_t = alpha_t (S_t / S0)^(-beta),
    alpha_t = exp((theta/sigma)(mu - sigma^2/2) t - (r + theta^2/2) t),
    beta  = theta / sigma,   theta = (mu - r) / sigma,

a strictly decreasing function of S_t whenever mu > r.  The module also
carries the bivariate-lognormal joint laws used throughout: the pair
(ln S_t, ln S_T) and the pair (ln G_T, ln S_T), where G_T is the
continuously monitored geometric average exp((1/T) int_0^T ln S_s ds).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

__all__ = [
    "MarketParams",
    "StatePriceCoeffs",
    "NormalLaw",
    "BiLognormalLaw",
    "cdf_sT",
    "quantile_sT",
    "terminal_log_law",
    "state_price_density",
    "conditional_law",
    "geometric_average_joint",
    "pair_joint_sT_st",
]


@dataclass(frozen=True)
class MarketParams:
    """Black-Scholes market parameters.

    Attributes
    ----------
    mu : float
        Drift of the risky asset per year.  Must exceed ``r`` so that the
        state-price density is decreasing in the asset price.
    r : float
        Continuously compounded risk-free rate per year.
    sigma : float
        Volatility per year, > 0.
    s0 : float
        Initial asset price, > 0.
    t_mat : float
        Investment horizon T in years, > 0.
    """

    mu: float
    r: float
    sigma: float
    s0: float
    t_mat: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not self.s0 > 0:
            raise ValueError(f"s0 must be > 0, got {self.s0}")
        if not self.t_mat > 0:
            raise ValueError(f"t_mat must be > 0, got {self.t_mat}")
        if not self.mu > self.r:
            raise ValueError(
                f"mu must exceed r (got mu={self.mu}, r={self.r}); "
                "otherwise the state-price density is not decreasing in S_t"
            )

    @property
    def theta(self) -> float:
        """Market price of risk (mu - r) / sigma."""
        return (self.mu - self.r) / self.sigma

    @property
    def beta(self) -> float:
        """Exponent theta / sigma of the state-price density, > 0."""
        return self.theta / self.sigma

    def log_drift(self, t: float) -> float:
        """Mean of ln(S_t / S0), i.e. (mu - sigma^2/2) t."""
        return (self.mu - 0.5 * self.sigma**2) * t

    def alpha(self, t: float) -> float:
        """Scale factor alpha_t of the state-price density at time t."""
        return float(
            np.exp(
                self.beta * (self.mu - 0.5 * self.sigma**2) * t
                - (self.r + 0.5 * self.theta**2) * t
            )
        )

    def state_price_coeffs(self, t: float | None = None) -> "StatePriceCoeffs":
        """Coefficients (alpha_t, beta) of xi_t = alpha_t (S_t/S0)^(-beta)."""
        if t is None:
            t = self.t_mat
        return StatePriceCoeffs(alpha_t=self.alpha(t), beta=self.beta)


@dataclass(frozen=True)
class StatePriceCoeffs:
    """Scale and exponent of the power-form state-price density."""

    alpha_t: float
    beta: float

    def __post_init__(self) -> None:
        if not self.alpha_t > 0:
            raise ValueError(f"alpha_t must be > 0, got {self.alpha_t}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class NormalLaw:
    """Normal law with mean ``mean`` and standard deviation ``sd``.

    ``mean`` may be an array (a family of conditional laws); ``sd`` is a
    scalar shared across the family.
    """

    mean: float | np.ndarray
    sd: float

    def cdf(self, x):
        return norm.cdf((np.asarray(x, dtype=float) - self.mean) / self.sd)

    def ppf(self, p):
        return self.mean + self.sd * norm.ppf(np.asarray(p, dtype=float))


@dataclass(frozen=True)
class BiLognormalLaw:
    """Joint normal law of two log-coordinates (X, Y) = (ln A, ln B).

    Attributes
    ----------
    mean1, mean2 : float
        Means of the two log-coordinates.
    sd1, sd2 : float
        Standard deviations, > 0.
    rho : float
        Correlation, |rho| <= 1.
    """

    mean1: float
    mean2: float
    sd1: float
    sd2: float
    rho: float

    def __post_init__(self) -> None:
        if not (self.sd1 > 0 and self.sd2 > 0):
            raise ValueError("sd1 and sd2 must be > 0")
        if not abs(self.rho) <= 1:
            raise ValueError(f"|rho| must be <= 1, got {self.rho}")

    @property
    def cov(self) -> float:
        return self.rho * self.sd1 * self.sd2


def cdf_sT(params: MarketParams, x) -> np.ndarray | float:
    """Cdf of S_T: Phi((ln(x/S0) - (mu - sigma^2/2) T)/(sigma sqrt(T)))."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("cdf_sT requires x > 0")
    z = (np.log(x / params.s0) - params.log_drift(params.t_mat)) / (
        params.sigma * np.sqrt(params.t_mat)
    )
    out = norm.cdf(z)
    return float(out) if out.ndim == 0 else out


def quantile_sT(params: MarketParams, p) -> np.ndarray | float:
    """Quantile of S_T, the inverse of :func:`cdf_sT` on (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("quantile_sT requires p in (0, 1)")
    out = params.s0 * np.exp(
        params.log_drift(params.t_mat)
        + params.sigma * np.sqrt(params.t_mat) * norm.ppf(p)
    )
    return float(out) if out.ndim == 0 else out


def terminal_log_law(params: MarketParams) -> NormalLaw:
    """Law of ln S_T."""
    return NormalLaw(
        mean=np.log(params.s0) + params.log_drift(params.t_mat),
        sd=params.sigma * np.sqrt(params.t_mat),
    )


def state_price_density(params: MarketParams, s_t, t: float) -> np.ndarray | float:
    """State-price density xi_t = alpha_t (s_t/S0)^(-beta) at time t.

    Strictly decreasing in ``s_t``.  ``t`` must lie in (0, T].
    """
    s_t = np.asarray(s_t, dtype=float)
    if np.any(s_t <= 0):
        raise ValueError("state_price_density requires s_t > 0")
    if not 0 < t <= params.t_mat:
        raise ValueError(f"t must be in (0, T={params.t_mat}], got {t}")
    out = params.alpha(t) * (s_t / params.s0) ** (-params.beta)
    return float(out) if out.ndim == 0 else out


def conditional_law(joint: BiLognormalLaw, given_coord: int, given_value) -> NormalLaw:
    """Conditional law of one log-coordinate given the other.

    For a bivariate normal pair, conditionally on Y the coordinate X is
    normal with mean E[X] + (cov/var(Y)) (y - E[Y]) and variance
    (1 - rho^2) var(X).

    Parameters
    ----------
    joint : BiLognormalLaw
    given_coord : int
        0 or 1: index of the observed coordinate.
    given_value : float or array
        Observed value(s) of the log-coordinate.
    """
    if given_coord not in (0, 1):
        raise ValueError("given_coord must be 0 or 1")
    given_value = np.asarray(given_value, dtype=float)
    if given_coord == 1:
        m_x, m_y, sd_x, sd_y = joint.mean1, joint.mean2, joint.sd1, joint.sd2
    else:
        m_x, m_y, sd_x, sd_y = joint.mean2, joint.mean1, joint.sd2, joint.sd1
    slope = joint.cov / sd_y**2
    mean = m_x + slope * (given_value - m_y)
    sd = np.sqrt((1.0 - joint.rho**2)) * sd_x
    if mean.ndim == 0:
        mean = float(mean)
    return NormalLaw(mean=mean, sd=float(sd))


def geometric_average_joint(params: MarketParams) -> BiLognormalLaw:
    """Joint law of (ln G_T, ln S_T).

    E[ln G_T] = ln S0 + (mu - sigma^2/2) T / 2, var[ln G_T] = sigma^2 T / 3,
    cov(ln G_T, ln S_T) = sigma^2 T / 2, hence correlation sqrt(3)/2.
    """
    T = params.t_mat
    m = params.log_drift(T)
    return BiLognormalLaw(
        mean1=np.log(params.s0) + 0.5 * m,
        mean2=np.log(params.s0) + m,
        sd1=params.sigma * np.sqrt(T / 3.0),
        sd2=params.sigma * np.sqrt(T),
        rho=np.sqrt(3.0) / 2.0,
    )


def pair_joint_sT_st(params: MarketParams, t: float) -> BiLognormalLaw:
    """Joint law of (ln S_t, ln S_T) for 0 < t < T.

    Correlation is sqrt(t/T); the conditional law of ln S_t given ln S_T has
    mean ln S0 + (t/T) ln(S_T/S0) and variance sigma^2 t (1 - t/T).
    """
    T = params.t_mat
    if not 0 < t < T:
        raise ValueError(f"t must be in (0, T={T}), got {t}")
    return BiLognormalLaw(
        mean1=np.log(params.s0) + params.log_drift(t),
        mean2=np.log(params.s0) + params.log_drift(T),
        sd1=params.sigma * np.sqrt(t),
        sd2=params.sigma * np.sqrt(T),
        rho=np.sqrt(t / T),
    )
