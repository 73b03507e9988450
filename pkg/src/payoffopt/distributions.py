"""One-dimensional distributions exposing a cdf / quantile pair.

Every distribution implements the left-continuous generalized inverse

    F^{-1}(p) = inf{x : F(x) >= p},

which is the quantile transform used by all payoff constructions.  Analytic
lognormal/normal kinds wrap closed forms; the empirical kind is backed by a
grid of (value, cdf) knots with piecewise-linear interpolation and clamped
tails, serializable to CSV with columns ``value,cdf``.
"""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

__all__ = [
    "Dist1D",
    "LognormalDist",
    "GaussianDist",
    "DegenerateDist",
    "EmpiricalDist",
    "quantile",
]


class Dist1D:
    """Base distribution interface: ``cdf``, ``ppf`` and a ``kind`` tag."""

    kind: str = "abstract"

    def cdf(self, x):  # pragma: no cover - interface
        raise NotImplementedError

    def ppf(self, p):  # pragma: no cover - interface
        raise NotImplementedError


def quantile(dist: Dist1D, p) -> np.ndarray | float:
    """Left-continuous generalized inverse F^{-1}(p) for p in (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("quantile requires p in (0, 1)")
    out = np.asarray(dist.ppf(p), dtype=float)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LognormalDist(Dist1D):
    """Lognormal law: ln X ~ N(log_mean, log_sd^2)."""

    log_mean: float
    log_sd: float
    kind: str = field(default="analytic-lognormal", init=False)

    def __post_init__(self) -> None:
        if not self.log_sd > 0:
            raise ValueError("log_sd must be > 0")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(
            x > 0,
            norm.cdf((np.log(np.maximum(x, 1e-300)) - self.log_mean) / self.log_sd),
            0.0,
        )
        return float(out) if out.ndim == 0 else out

    def ppf(self, p):
        return np.exp(self.log_mean + self.log_sd * norm.ppf(np.asarray(p, dtype=float)))


@dataclass(frozen=True)
class GaussianDist(Dist1D):
    """Normal law N(mean, sd^2)."""

    mean: float
    sd: float
    kind: str = field(default="analytic-normal", init=False)

    def __post_init__(self) -> None:
        if not self.sd > 0:
            raise ValueError("sd must be > 0")

    def cdf(self, x):
        return norm.cdf((np.asarray(x, dtype=float) - self.mean) / self.sd)

    def ppf(self, p):
        return self.mean + self.sd * norm.ppf(np.asarray(p, dtype=float))


@dataclass(frozen=True)
class DegenerateDist(Dist1D):
    """Point mass at ``value`` (a constant payoff target)."""

    value: float
    kind: str = field(default="degenerate", init=False)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = (x >= self.value).astype(float)
        return float(out) if out.ndim == 0 else out

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        out = np.full_like(p, self.value, dtype=float)
        return float(out) if out.ndim == 0 else out


class EmpiricalDist(Dist1D):
    """Grid-backed distribution with knots (values[k], probs[k]).

    Values must be strictly increasing and cdf knots strictly increasing in
    (0, 1).  The cdf interpolates linearly between knots and clamps to
    [probs[0], probs[-1]] outside the value range; the quantile interpolates
    linearly between order statistics and clamps to [values[0], values[-1]]
    outside the probability range.  In the large-sample limit the clamped
    tails carry vanishing mass, so the 0/1 cdf limits hold asymptotically.
    """

    kind = "empirical-grid"

    def __init__(self, values, probs):
        values = np.asarray(values, dtype=float)
        probs = np.asarray(probs, dtype=float)
        if values.ndim != 1 or values.size < 2 or values.shape != probs.shape:
            raise ValueError("values and probs must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(values) <= 0):
            raise ValueError("values must be strictly increasing")
        if np.any(np.diff(probs) <= 0):
            raise ValueError("cdf knots must be strictly increasing")
        if probs[0] <= 0 or probs[-1] >= 1:
            raise ValueError("cdf knots must lie strictly inside (0, 1)")
        self.values = values
        self.probs = probs

    @classmethod
    def from_samples(cls, samples) -> "EmpiricalDist":
        """Empirical distribution of a sample, atoms collapsed to single knots.

        Each distinct value becomes one knot at the midpoint of its ecdf jump,
        the standard continuity correction for quantile estimation.
        """
        samples = np.asarray(samples, dtype=float).ravel()
        if samples.size < 2:
            raise ValueError("need at least 2 samples")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        values, counts = np.unique(samples, return_counts=True)
        n = samples.size
        cum = np.cumsum(counts)
        probs = (cum - 0.5 * counts) / n
        if values.size < 2:
            # all samples identical: widen into a numerically degenerate grid
            v = values[0]
            eps = max(abs(v), 1.0) * 1e-12
            return cls([v - eps, v + eps], [0.25, 0.75])
        return cls(values, probs)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.values, self.probs)
        return float(out) if out.ndim == 0 else out

    def ppf(self, p):
        p = np.asarray(p, dtype=float)
        out = np.interp(p, self.probs, self.values)
        return float(out) if out.ndim == 0 else out

    # -- CSV serialization: header ``value,cdf``, values strictly increasing
    def to_csv(self, path_or_file) -> None:
        close = False
        if isinstance(path_or_file, (str, os.PathLike)):
            fh = open(path_or_file, "w", newline="")
            close = True
        else:
            fh = path_or_file
        try:
            writer = csv.writer(fh)
            writer.writerow(["value", "cdf"])
            for v, p in zip(self.values, self.probs):
                writer.writerow([f"{v:.12g}", f"{p:.12g}"])
        finally:
            if close:
                fh.close()

    @classmethod
    def from_csv(cls, path_or_file) -> "EmpiricalDist":
        close = False
        if isinstance(path_or_file, (str, os.PathLike)):
            fh = open(path_or_file, "r", newline="")
            close = True
        else:
            fh = path_or_file
        try:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["value", "cdf"]:
                raise ValueError("expected CSV header 'value,cdf'")
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        finally:
            if close:
                fh.close()
        if not rows:
            raise ValueError("empty distribution file")
        values, probs = zip(*rows)
        return cls(values, probs)

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()
