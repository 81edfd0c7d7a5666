"""Planar geometry, simulation windows, and reproducible point-process sampling.

Points are represented as float64 arrays of shape (n, 2).  All randomness
flows through numpy's PCG64 generator seeded from a 64-bit integer, so a
(seed, config, window) triple reproduces the same realization bit-exactly
on any platform running the same numpy version.  Poisson counts use
numpy's generator (inversion for small means, transformed rejection for
large ones).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class Window:
    """Rectangular simulation region [0, width] x [0, height].

    boundary_mode "plain" uses Euclidean distances; "torus" wraps both
    axes, which changes distance computation only, never sampling.
    """

    width: float
    height: float
    boundary_mode: str = "plain"

    def __post_init__(self):
        if not (math.isfinite(self.width) and self.width > 0):
            raise ValueError(f"window width must be finite and positive, got {self.width}")
        if not (math.isfinite(self.height) and self.height > 0):
            raise ValueError(f"window height must be finite and positive, got {self.height}")
        if self.boundary_mode not in ("plain", "torus"):
            raise ValueError(f"unknown boundary_mode {self.boundary_mode!r}")

    @property
    def area(self) -> float:
        return self.width * self.height


UNIT_SQUARE = Window(1.0, 1.0)


@dataclass(frozen=True)
class PointProcessConfig:
    """Point process specification.

    kind "poisson" draws a Poisson(intensity * area) count of i.i.d.
    uniform points; kind "uniform_n" draws exactly ``n`` uniform points.
    """

    kind: str = "poisson"
    intensity: float = 0.0
    n: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("poisson", "uniform_n"):
            raise ValueError(f"unknown point process kind {self.kind!r}")
        if self.kind == "poisson":
            if not math.isfinite(self.intensity) or self.intensity < 0:
                raise ValueError(f"intensity must be finite and >= 0, got {self.intensity}")
        else:
            if self.n < 0:
                raise ValueError(f"n must be >= 0, got {self.n}")


def poisson_process(intensity: float, seed: int = 0) -> PointProcessConfig:
    return PointProcessConfig(kind="poisson", intensity=intensity, seed=seed)


def uniform_process(n: int, seed: int = 0) -> PointProcessConfig:
    return PointProcessConfig(kind="uniform_n", n=n, seed=seed)


def sample(config: PointProcessConfig, window: Window) -> np.ndarray:
    """Draw one realization of the point process inside the window.

    Returns an (n, 2) float64 array.  Identical (config, window) always
    produce identical output.
    """
    rng = np.random.Generator(np.random.PCG64(config.seed & _MASK64))
    if config.kind == "poisson":
        mean = config.intensity * window.area
        count = int(rng.poisson(mean)) if mean > 0 else 0
    else:
        count = config.n
    pts = rng.random((count, 2))
    pts[:, 0] *= window.width
    pts[:, 1] *= window.height
    return pts


def distance(a, b, window: Window | None = None) -> float:
    """Distance between two points, torus-aware when the window wraps.

    Torus distance is the minimum over the nine periodic images, which
    for a rectangle reduces to per-axis wrapped differences.
    """
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    dx = abs(ax - bx)
    dy = abs(ay - by)
    if window is not None and window.boundary_mode == "torus":
        dx = min(dx, window.width - dx)
        dy = min(dy, window.height - dy)
    return math.hypot(dx, dy)


def pairwise_distances(points: np.ndarray, window: Window | None = None) -> np.ndarray:
    """Full (n, n) distance matrix; torus images applied per axis if asked."""
    pts = np.asarray(points, dtype=np.float64)
    dx = np.abs(pts[:, 0][:, None] - pts[:, 0][None, :])
    dy = np.abs(pts[:, 1][:, None] - pts[:, 1][None, :])
    if window is not None and window.boundary_mode == "torus":
        dx = np.minimum(dx, window.width - dx)
        dy = np.minimum(dy, window.height - dy)
    return np.hypot(dx, dy)


def derive_trial_seed(base_seed: int, trial_index: int) -> int:
    """Mix a base seed with a trial index into an independent 64-bit seed.

    SplitMix64: add the golden-gamma increment ``trial_index`` times, then
    apply the Stafford mix13 finalizer.  The finalizer is a bijection on
    64-bit words and the increment is odd, so for a fixed base seed the
    map trial_index -> seed is injective over the full 2**64 range.
    """
    z = (base_seed + trial_index * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64
