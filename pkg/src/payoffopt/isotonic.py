"""Isotonic projection onto the cone of nonincreasing functions (PAVA).

The projection of a grid function phi onto {f : f nonincreasing} in the
weighted L2 norm is computed by pool-adjacent-violators: adjacent blocks
that violate the ordering are merged and replaced by their weighted mean.
The result is exact on finite grids and idempotent, equals the slope of the
smallest concave majorant of the cumulative sums, and preserves the weighted
sum of phi over every pooled block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["IsotonicFit", "isotonic_project", "pava_nonincreasing"]


def pava_nonincreasing(y, weights=None) -> np.ndarray:
    """Weighted L2 projection of ``y`` onto the nonincreasing cone."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("y must be a non-empty 1-D array")
    if weights is None:
        w = np.ones_like(y)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != y.shape:
            raise ValueError("weights must match y")
        if np.any(w < 0):
            raise ValueError("weights must be >= 0")
    n = y.size
    vals = np.empty(n)
    wts = np.empty(n)
    cnt = np.empty(n, dtype=np.int64)
    m = 0
    for i in range(n):
        vals[m] = y[i]
        wts[m] = w[i]
        cnt[m] = 1
        m += 1
        # pooling: a nonincreasing fit violates when the later block is larger
        while m > 1 and vals[m - 2] < vals[m - 1]:
            tot = wts[m - 2] + wts[m - 1]
            if tot > 0:
                vals[m - 2] = (vals[m - 2] * wts[m - 2] + vals[m - 1] * wts[m - 1]) / tot
            else:
                vals[m - 2] = 0.5 * (vals[m - 2] + vals[m - 1])
            wts[m - 2] = tot
            cnt[m - 2] += cnt[m - 1]
            m -= 1
    out = np.empty(n)
    pos = 0
    for j in range(m):
        out[pos:pos + cnt[j]] = vals[j]
        pos += cnt[j]
    return out


@dataclass(frozen=True)
class IsotonicFit:
    """Grid, input values, projected values and the per-point masses."""

    grid: np.ndarray
    phi: np.ndarray
    phi_hat: np.ndarray
    weights: np.ndarray


def isotonic_project(phi, weights=None, grid=None) -> IsotonicFit:
    """Project ``phi`` on [0, 1]-grid points onto the nonincreasing cone.

    ``grid`` defaults to equally spaced points on [0, 1]; ``weights`` default
    to uniform masses.  Returns the full fit so callers can inspect pooling.
    """
    phi = np.asarray(phi, dtype=float)
    if grid is None:
        grid = np.linspace(0.0, 1.0, phi.size)
    else:
        grid = np.asarray(grid, dtype=float)
        if grid.shape != phi.shape:
            raise ValueError("grid must match phi")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
    if weights is None:
        w = np.ones_like(phi)
    else:
        w = np.asarray(weights, dtype=float)
    phi_hat = pava_nonincreasing(phi, w)
    return IsotonicFit(grid=grid, phi=phi, phi_hat=phi_hat, weights=w)
