"""Payoff representation: a deterministic function of a few path observations.

A :class:`PayoffFn` evaluates on the prices observed at its ``times`` (in
ascending order) followed by the geometric average G_T when ``uses_average``
is set.  All evaluators are vectorized over numpy arrays of observations.
Payoffs are assumed square integrable under the model; the Monte Carlo
pricer asserts finite second moments empirically.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "PayoffFn",
    "terminal_payoff",
    "two_point_payoff",
    "average_payoff",
    "average_terminal_payoff",
    "bond",
    "european_call",
    "european_put",
    "payoff_from_table",
    "payoff_table",
    "write_payoff_table",
    "read_payoff_table",
]


@dataclass(frozen=True)
class PayoffFn:
    """Payoff as a function of a small set of path observations.

    Attributes
    ----------
    times : tuple of float
        Observation dates in (0, T], ascending.  Prices at these dates are
        passed positionally to ``fn`` in the same order.
    fn : callable
        Vectorized evaluator; receives one array per observation time, then
        the geometric-average array when ``uses_average``.
    uses_average : bool
        Whether the payoff reads the geometric average G_T.
    label : str
        Human-readable tag used in reports.
    meta : dict
        Optional provenance (family parameters, coefficients); not compared.
    """

    times: tuple[float, ...]
    fn: Callable[..., np.ndarray] = field(repr=False)
    uses_average: bool = False
    label: str = ""
    meta: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        times = tuple(float(t) for t in self.times)
        if any(t <= 0 for t in times):
            raise ValueError("observation times must be positive")
        if list(times) != sorted(times):
            raise ValueError("observation times must be ascending")
        if len(set(times)) != len(times):
            raise ValueError("observation times must be distinct")
        if not times and not self.uses_average:
            raise ValueError("a payoff must observe at least one quantity")
        object.__setattr__(self, "times", times)

    def __call__(self, *obs) -> np.ndarray:
        return np.asarray(self.fn(*obs), dtype=float)


def terminal_payoff(fn, t_mat: float, label: str = "", meta: dict | None = None) -> PayoffFn:
    """Payoff f(S_T)."""
    return PayoffFn(times=(t_mat,), fn=fn, label=label, meta=meta or {})


def two_point_payoff(fn, t: float, t_mat: float, label: str = "",
                     meta: dict | None = None) -> PayoffFn:
    """Payoff f(S_t, S_T) for an intermediate date 0 < t < T."""
    if not 0 < t < t_mat:
        raise ValueError(f"t must be in (0, T={t_mat}), got {t}")
    return PayoffFn(times=(t, t_mat), fn=fn, label=label, meta=meta or {})


def average_payoff(fn, t_mat: float, label: str = "", meta: dict | None = None) -> PayoffFn:
    """Payoff f(G_T) of the geometric average alone."""
    return PayoffFn(times=(), fn=fn, uses_average=True, label=label, meta=meta or {})


def average_terminal_payoff(fn, t_mat: float, label: str = "",
                            meta: dict | None = None) -> PayoffFn:
    """Payoff f(S_T, G_T)."""
    return PayoffFn(times=(t_mat,), fn=fn, uses_average=True, label=label, meta=meta or {})


def bond(t_mat: float, notional: float = 1.0) -> PayoffFn:
    return terminal_payoff(lambda s: np.full_like(np.asarray(s, float), notional),
                           t_mat, label=f"bond({notional})")


def european_call(strike: float, t_mat: float) -> PayoffFn:
    if strike < 0:
        raise ValueError("strike must be >= 0")
    return terminal_payoff(lambda s: np.maximum(s - strike, 0.0), t_mat,
                           label=f"european-call(K={strike})")


def european_put(strike: float, t_mat: float) -> PayoffFn:
    if strike < 0:
        raise ValueError("strike must be >= 0")
    return terminal_payoff(lambda s: np.maximum(strike - s, 0.0), t_mat,
                           label=f"european-put(K={strike})")


def payoff_from_table(s_values, payoff_values, t_mat: float, label: str = "table") -> PayoffFn:
    """Terminal payoff interpolated linearly from a sampled (s, payoff) table."""
    s_values = np.asarray(s_values, dtype=float)
    payoff_values = np.asarray(payoff_values, dtype=float)
    if s_values.ndim != 1 or s_values.shape != payoff_values.shape or s_values.size < 2:
        raise ValueError("need matching 1-D arrays with at least 2 rows")
    if np.any(np.diff(s_values) <= 0):
        raise ValueError("s values must be strictly increasing")
    return terminal_payoff(lambda s: np.interp(s, s_values, payoff_values), t_mat, label=label)


def payoff_table(payoff: PayoffFn, s_grid) -> np.ndarray:
    """Sample a terminal payoff on a price grid; returns an (n, 2) array."""
    if payoff.uses_average or len(payoff.times) != 1:
        raise ValueError("payoff_table applies to terminal payoffs f(S_T) only")
    s_grid = np.asarray(s_grid, dtype=float)
    return np.column_stack([s_grid, payoff(s_grid)])


def write_payoff_table(payoff: PayoffFn, s_grid, path) -> None:
    """Export a terminal payoff as CSV columns ``s,payoff`` (static replication)."""
    table = payoff_table(payoff, s_grid)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "payoff"])
        for s, v in table:
            writer.writerow([f"{s:.12g}", f"{v:.12g}"])


def read_payoff_table(path_or_file):
    """Read a CSV ``s,payoff`` table; returns (s_values, payoff_values)."""
    close = False
    if isinstance(path_or_file, (str, os.PathLike)):
        fh = open(path_or_file, "r", newline="")
        close = True
    else:
        fh = path_or_file
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["s", "payoff"]:
            raise ValueError("expected CSV header 's,payoff'")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    finally:
        if close:
            fh.close()
    if len(rows) < 2:
        raise ValueError("payoff table needs at least 2 rows")
    s, v = zip(*rows)
    return np.asarray(s), np.asarray(v)
