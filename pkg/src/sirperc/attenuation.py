"""Path-loss models: the singular power law and its bounded variant.

Two families are provided.  ``PowerLaw(alpha)`` is g(x) = x**-alpha,
singular at the origin; ``BoundedPowerLaw(alpha, r0)`` is
g(x) = (r0 + x)**-alpha, finite everywhere.  The square-lattice
construction and the coloring lower bound require a bounded model with
integrable tail (alpha > 2); the hexagonal construction and the coloring
upper bound work with the singular law.  Transmit power is fixed to 1:
it cancels in every SIR ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PowerLaw:
    """g(x) = x**-alpha.  Singular at x = 0; requires alpha >= 2."""

    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha >= 2):
            raise ValueError(f"power_law requires alpha >= 2, got {self.alpha}")

    @property
    def kind(self) -> str:
        return "power_law"

    @property
    def bounded(self) -> bool:
        return False

    def __call__(self, d):
        return self.eval(d)

    def eval(self, d):
        """Evaluate g at distance(s) d.  Rejects d = 0 (singularity)."""
        if np.isscalar(d):
            if d <= 0:
                raise ValueError("power_law is singular at d = 0; d must be > 0")
            return float(d) ** -self.alpha
        d = np.asarray(d, dtype=np.float64)
        if np.any(d <= 0):
            raise ValueError("power_law is singular at d = 0; all d must be > 0")
        return d ** -self.alpha

    def inverse(self, y: float) -> float:
        """Distance at which g equals y (range: y > 0)."""
        if not (y > 0) or not math.isfinite(y):
            raise ValueError(f"y = {y} outside the range of x**-alpha")
        return y ** (-1.0 / self.alpha)

    def tail_integral(self) -> float:
        """Integral of x*g(x) over (0, inf): always divergent.

        The integrand x**(1-alpha) diverges at the origin for alpha >= 2.
        """
        return math.inf

    def signal_integral(self) -> float:
        """Integral of g(x) over (0, inf): divergent at the origin for alpha > 1."""
        return math.inf


@dataclass(frozen=True)
class BoundedPowerLaw:
    """g(x) = (r0 + x)**-alpha with g(0) = r0**-alpha finite."""

    alpha: float
    r0: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"bounded_power_law requires alpha > 0, got {self.alpha}")
        if not (math.isfinite(self.r0) and self.r0 > 0):
            raise ValueError(f"bounded_power_law requires r0 > 0, got {self.r0}")

    @property
    def kind(self) -> str:
        return "bounded_power_law"

    @property
    def bounded(self) -> bool:
        return True

    def __call__(self, d):
        return self.eval(d)

    def eval(self, d):
        if np.isscalar(d):
            if d < 0:
                raise ValueError("distance must be >= 0")
            return (self.r0 + float(d)) ** -self.alpha
        d = np.asarray(d, dtype=np.float64)
        if np.any(d < 0):
            raise ValueError("distance must be >= 0")
        return (self.r0 + d) ** -self.alpha

    def inverse(self, y: float) -> float:
        """Distance at which g equals y (range: 0 < y <= r0**-alpha)."""
        if not (0 < y <= self.r0 ** -self.alpha):
            raise ValueError(
                f"y = {y} outside the range (0, {self.r0 ** -self.alpha}] of (r0+x)**-alpha"
            )
        return y ** (-1.0 / self.alpha) - self.r0

    def tail_integral(self) -> float:
        """Integral of x*g(x) over (0, inf).

        Closed form r0**(2-alpha) / ((alpha-1)(alpha-2)) for alpha > 2;
        the tail diverges logarithmically or worse for alpha <= 2.
        """
        if self.alpha <= 2:
            return math.inf
        return self.r0 ** (2 - self.alpha) / ((self.alpha - 1) * (self.alpha - 2))

    def signal_integral(self) -> float:
        """Integral of g(x) over (0, inf): r0**(1-alpha) / (alpha-1) for alpha > 1."""
        if self.alpha <= 1:
            return math.inf
        return self.r0 ** (1 - self.alpha) / (self.alpha - 1)


AttenuationModel = PowerLaw | BoundedPowerLaw


def make_model(kind: str, alpha: float, r0: float = 1.0) -> AttenuationModel:
    """Build a model from config keys (attenuation.kind/.alpha/.r0)."""
    if kind == "power_law":
        return PowerLaw(alpha=alpha)
    if kind == "bounded_power_law":
        return BoundedPowerLaw(alpha=alpha, r0=r0)
    raise ValueError(f"unknown attenuation kind {kind!r}")
