"""Closed-form Peierls machinery for the square-lattice construction.

Evaluates the chain p_A -> p1 -> p2 -> q -> circuit series that converts
edge-closure probabilities into a bound on the existence of a closed
circuit around the origin, plus the Chernoff cell-occupancy bounds used
by the coloring analysis.

The vacancy probability of a side-s cell defaults to exp(-lambda*s^2)
(``area`` convention, the dimensionally consistent Poisson void
probability).  The source text writes exp(-lambda*s); that reading is
preserved under the ``paper_literal`` convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .attenuation import AttenuationModel

__all__ = [
    "Q_STAR",
    "BoundsConfig",
    "BoundsReport",
    "peierls_series",
    "peierls_series_partial",
    "evaluate",
    "find_supercritical_interval",
    "chernoff_cell_bounds",
]

# Root of 3(1-3q)^2 = 4q: the circuit series equals 1 exactly here.
Q_STAR = (11.0 - 2.0 * math.sqrt(10.0)) / 27.0


@dataclass(frozen=True)
class BoundsConfig:
    """Inputs for one evaluation of the bound chain.

    K is the constant imported from the interference-concentration
    result of prior work; it is not pinned numerically there, so it is
    exposed as a parameter (default 1).
    """

    lam: float
    M: float
    T: float
    model: AttenuationModel
    K: float = 1.0
    area_convention: str = "area"

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        for name, v in (("M", self.M), ("T", self.T), ("K", self.K)):
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive, got {v}")
        if self.area_convention not in ("area", "paper_literal"):
            raise ValueError(f"unknown area_convention {self.area_convention!r}")


@dataclass(frozen=True)
class BoundsReport:
    s: float
    p_A: float
    p1: float
    p2: float
    q: float
    series_value: float
    subcritical_series: bool
    q_below_threshold: bool


def peierls_series(q: float) -> float:
    """Closed form of sum_{n>=1} 4 n 3^(n-2) q^n = 4q / (3 (1-3q)^2).

    Diverges for q >= 1/3.
    """
    if q < 0:
        raise ValueError(f"q must be >= 0, got {q}")
    if q >= 1.0 / 3.0:
        return math.inf
    return 4.0 * q / (3.0 * (1.0 - 3.0 * q) ** 2)


def peierls_series_partial(q: float, n_terms: int) -> float:
    """Partial sum of the circuit-counting series, for cross-checking."""
    n = np.arange(1, n_terms + 1, dtype=np.float64)
    return float(np.sum(4.0 * n * 3.0 ** (n - 2) * q ** n))


def _cell_side(M: float, T: float, model: AttenuationModel) -> float:
    """Lattice side s = g^{-1}(M T) / sqrt(5); raises when M*T leaves g's range."""
    d = model.inverse(M * T)
    s = d / math.sqrt(5.0)
    if s <= 0:
        raise ValueError(
            f"M*T = {M * T} gives a degenerate lattice side s = {s}; "
            "need M*T strictly inside the range of g"
        )
    return s


def _p_A(lam: float, s: float, convention: str) -> float:
    expo = lam * s * s if convention == "area" else lam * s
    return 1.0 - (1.0 - math.exp(-expo)) ** 2


def _p2(lam: float, M: float, K: float, model: AttenuationModel) -> float:
    g_int = model.signal_integral()
    if not math.isfinite(g_int):
        raise ValueError("p2 needs a finite integral of g over (0, inf); use a bounded model")
    return math.exp(2.0 * lam * g_int / K - M / K)


def evaluate(config: BoundsConfig) -> BoundsReport:
    """Compute the full bound chain for one parameter point."""
    if not math.isfinite(config.model.tail_integral()):
        raise ValueError("bound chain requires a model with finite integral of x*g(x)")
    s = _cell_side(config.M, config.T, config.model)
    p_A = _p_A(config.lam, s, config.area_convention)
    p1 = p_A ** 0.25
    p2 = _p2(config.lam, config.M, config.K, config.model)
    q = math.sqrt(p1) + math.sqrt(p2)
    series = peierls_series(q) if q < 1.0 / 3.0 else math.inf
    return BoundsReport(
        s=s,
        p_A=p_A,
        p1=p1,
        p2=p2,
        q=q,
        series_value=series,
        subcritical_series=series < 1.0,
        q_below_threshold=q < Q_STAR,
    )


def find_supercritical_interval(
    T: float,
    K: float,
    model: AttenuationModel,
    M: float | None = None,
    area_convention: str = "area",
    lam_max: float = 1e9,
    rtol: float = 1e-6,
) -> tuple[float, float] | None:
    """The lambda interval where q(lambda) < Q_STAR, or None when empty.

    M defaults to the reciprocal rule M = 1/T.  q is the sum of a
    decreasing exponential-type term (through p1) and an increasing
    exponential (p2), hence convex in lambda; the sub-threshold set is
    an interval, located by golden-section-free grid bracketing plus
    bisection to relative endpoint accuracy ``rtol``.
    """
    if M is None:
        M = 1.0 / T
    try:
        s = _cell_side(M, T, model)
    except ValueError:
        return None
    g_int = model.signal_integral()
    if not math.isfinite(g_int):
        return None

    def q_of(lam: float) -> float:
        p_A = _p_A(lam, s, area_convention)
        return p_A ** 0.125 + math.exp((2.0 * lam * g_int - M) / (2.0 * K))

    # p2 alone exceeds the threshold beyond this lambda, bounding the search.
    lam_hi = (M + 2.0 * K * math.log(Q_STAR)) / (2.0 * g_int)
    lam_hi = min(lam_hi, lam_max)
    if lam_hi <= 0:
        return None
    grid = np.linspace(0.0, lam_hi, 4097)
    vals = np.array([q_of(x) for x in grid])
    below = vals < Q_STAR
    if not below.any():
        return None
    idx = np.flatnonzero(below)
    if not np.array_equal(idx, np.arange(idx[0], idx[-1] + 1)):
        raise RuntimeError("sub-threshold set is not contiguous on the grid; q not convex?")
    lo_i, hi_i = int(idx[0]), int(idx[-1])

    f = lambda x: q_of(x) - Q_STAR
    if lo_i == 0:
        lo = grid[0] if f(grid[0]) < 0 else brentq(f, grid[0], grid[1], xtol=1e-15, rtol=8.9e-16)
    else:
        lo = brentq(f, grid[lo_i - 1], grid[lo_i], xtol=1e-15, rtol=8.9e-16)
    if hi_i == len(grid) - 1:
        hi = grid[-1]
    else:
        hi = brentq(f, grid[hi_i], grid[hi_i + 1], xtol=1e-15, rtol=8.9e-16)
    if hi <= lo:
        return None
    return float(lo), float(hi)


def chernoff_cell_bounds(n: float, c: float, delta: float) -> tuple[float, float]:
    """The two displayed occupancy tail bounds for the unit-square tiling.

    First value: probability a side sqrt(c log n / n) cell exceeds
    (1+delta) c log n nodes, bounded by n^(-c delta^2 / 3).  Second
    value: probability a node-centered side sqrt(m log n / n) square
    holds fewer than (m/2) log n nodes, stated as n^(-2).
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not (0 < delta <= 1):
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    return float(n) ** (-c * delta * delta / 3.0), float(n) ** -2.0
