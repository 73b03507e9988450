"""Bivariate dependence toolkit: copulas, Rosenblatt transform, Hoeffding bounds.

The dependence between a payoff and a benchmark is specified through a
:class:`CopulaSpec`: Gaussian with correlation rho in (-1, 1), the Frechet
upper/lower bounds (comonotone / anti-monotone), or independence.  The
Frechet bounds are represented symbolically rather than as rho = +-1 so the
conditional formulas stay well defined.

For the Gaussian copula the conditional distribution of the first coordinate
given the second at level v is

    C_{1|v}(x)      = Phi((Phi^{-1}(x) - rho Phi^{-1}(v)) / sqrt(1 - rho^2)),
    C_{1|v}^{-1}(y) = Phi(sqrt(1 - rho^2) Phi^{-1}(y) + rho Phi^{-1}(v)).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .distributions import Dist1D

__all__ = [
    "CopulaSpec",
    "gaussian_copula",
    "frechet_upper",
    "frechet_lower",
    "independence_copula",
    "gaussian_copula_conditional",
    "rosenblatt_uniform",
    "frechet_bounds_check",
    "FrechetBounds",
]

_KINDS = ("gaussian", "frechet-upper", "frechet-lower", "independence")


@dataclass(frozen=True)
class CopulaSpec:
    """Dependence constraint between a payoff and a benchmark."""

    kind: str
    rho: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown copula kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "gaussian":
            if self.rho is None:
                raise ValueError("gaussian copula requires rho")
            if not -1 < self.rho < 1:
                raise ValueError(
                    f"gaussian rho must lie in (-1, 1), got {self.rho}; "
                    "use frechet-upper / frechet-lower for the comonotone and "
                    "anti-monotone limits"
                )
        elif self.rho is not None:
            raise ValueError(f"rho is only meaningful for the gaussian kind, got kind={self.kind!r}")

    def conditional_cdf(self, x, v):
        """C_{1|v}(x): conditional cdf of the first coordinate given the second."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.kind == "gaussian":
            num = norm.ppf(x) - self.rho * norm.ppf(v)
            return norm.cdf(num / np.sqrt(1.0 - self.rho**2))
        if self.kind == "independence":
            return x + 0.0 * v
        if self.kind == "frechet-upper":
            return (x >= v).astype(float)
        # frechet-lower: point mass at 1 - v
        return (x >= 1.0 - v).astype(float)

    def conditional_ppf(self, y, v):
        """C_{1|v}^{-1}(y): conditional quantile of the first coordinate."""
        y = np.asarray(y, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.kind == "gaussian":
            return norm.cdf(np.sqrt(1.0 - self.rho**2) * norm.ppf(y) + self.rho * norm.ppf(v))
        if self.kind == "independence":
            return y + 0.0 * v
        if self.kind == "frechet-upper":
            return v + 0.0 * y
        return 1.0 - v + 0.0 * y


def gaussian_copula(rho: float) -> CopulaSpec:
    return CopulaSpec(kind="gaussian", rho=rho)


def frechet_upper() -> CopulaSpec:
    return CopulaSpec(kind="frechet-upper")


def frechet_lower() -> CopulaSpec:
    return CopulaSpec(kind="frechet-lower")


def independence_copula() -> CopulaSpec:
    return CopulaSpec(kind="independence")


@dataclass(frozen=True)
class GaussianCopulaConditionalDist(Dist1D):
    """The conditional law C_{1|v} of a Gaussian copula as a Dist1D on (0, 1)."""

    rho: float
    v: float
    kind: str = field(default="copula-conditional", init=False)

    def cdf(self, x):
        num = norm.ppf(np.asarray(x, dtype=float)) - self.rho * norm.ppf(self.v)
        return norm.cdf(num / np.sqrt(1.0 - self.rho**2))

    def ppf(self, y):
        return norm.cdf(
            np.sqrt(1.0 - self.rho**2) * norm.ppf(np.asarray(y, dtype=float))
            + self.rho * norm.ppf(self.v)
        )


def gaussian_copula_conditional(rho: float, v: float) -> GaussianCopulaConditionalDist:
    """Conditional distribution C_{1|v} of a Gaussian copula, as a Dist1D.

    Raises for |rho| >= 1: the degenerate limits are the Frechet kinds of
    :class:`CopulaSpec`, not a Gaussian copula.
    """
    if not -1 < rho < 1:
        raise ValueError(
            f"gaussian rho must lie in (-1, 1), got {rho}; "
            "use the frechet-upper / frechet-lower copula kinds instead"
        )
    if not 0 < v < 1:
        raise ValueError(f"v must lie in (0, 1), got {v}")
    return GaussianCopulaConditionalDist(rho=rho, v=v)


def rosenblatt_uniform(joint_conditional_cdf, x_given, y):
    """Rosenblatt transform V = F_{Y|X=x}(y).

    When the conditional cdf is continuous in y for each x, V is uniform on
    (0, 1) and independent of X over the joint law, and increasing in y for
    fixed x.  ``joint_conditional_cdf`` is a callable (x, y) -> probability.
    """
    return joint_conditional_cdf(x_given, y)


@dataclass(frozen=True)
class FrechetBounds:
    """Hoeffding-Frechet bracket of E[XY] on the empirical measure."""

    lower: float
    e_xy: float
    upper: float


def frechet_bounds_check(x, y) -> FrechetBounds:
    """Empirical Hoeffding-Frechet bounds for E[XY].

    Returns (E[F_X^{-1}(U) F_Y^{-1}(1-U)], sample E[XY], E[F_X^{-1}(U) F_Y^{-1}(U)])
    with empirical marginals, i.e. the anti-monotone and comonotone couplings
    of the sorted samples.  lower <= e_xy <= upper up to sampling tolerance,
    with equality exactly when the pairs are anti-monotone / comonotone.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise ValueError("x and y must have equal length")
    if x.size < 2:
        raise ValueError("need at least 2 sample pairs")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("samples must be finite")
    xs = np.sort(x)
    ys = np.sort(y)
    upper = float(np.mean(xs * ys))
    lower = float(np.mean(xs * ys[::-1]))
    e_xy = float(np.mean(x * y))
    return FrechetBounds(lower=lower, e_xy=e_xy, upper=upper)
