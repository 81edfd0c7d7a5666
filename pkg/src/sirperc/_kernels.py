"""Numba kernels for the quadratic interference sums.

Everything here is exact float64 arithmetic, no approximations: the
kernels only move the O(n^2) loops out of Python.  Small integer
path-loss exponents get a repeated-multiplication fast path (libm pow
dominates the runtime otherwise); kernels are compiled once per
exponent and cached.  Per-receiver sums always accumulate sequentially
over the point index, so results do not depend on the thread count.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

_NEG_POW_CACHE: dict[float, object] = {}
_KERNEL_CACHE: dict[tuple, object] = {}


def _neg_pow(alpha: float):
    """Compiled x -> x**(-alpha) with fast paths for small integer alpha."""
    alpha = float(alpha)
    fn = _NEG_POW_CACHE.get(alpha)
    if fn is not None:
        return fn
    if alpha == 2.0:
        def f(x):
            return 1.0 / (x * x)
    elif alpha == 3.0:
        def f(x):
            return 1.0 / (x * x * x)
    elif alpha == 4.0:
        def f(x):
            x2 = x * x
            return 1.0 / (x2 * x2)
    elif alpha == 6.0:
        def f(x):
            x2 = x * x
            return 1.0 / (x2 * x2 * x2)
    else:
        def f(x):
            return x ** (-alpha)
    fn = njit(inline="always")(f)
    _NEG_POW_CACHE[alpha] = fn
    return fn


def _total_power_kernel(alpha: float):
    key = ("total", float(alpha))
    k = _KERNEL_CACHE.get(key)
    if k is not None:
        return k
    g = _neg_pow(alpha)

    @njit(parallel=True)
    def kernel(pts, r0):
        n = pts.shape[0]
        out = np.zeros(n)
        for j in prange(n):
            xj = pts[j, 0]
            yj = pts[j, 1]
            acc = 0.0
            for k in range(n):
                if k == j:
                    continue
                dx = pts[k, 0] - xj
                dy = pts[k, 1] - yj
                acc += g(r0 + np.sqrt(dx * dx + dy * dy))
            out[j] = acc
        return out

    _KERNEL_CACHE[key] = kernel
    return kernel


def total_power_bounded(pts: np.ndarray, r0: float, alpha: float) -> np.ndarray:
    """P[j] = sum_{k != j} (r0 + d_kj)**-alpha."""
    return _total_power_kernel(alpha)(pts, r0)


def _cell_pair_kernel(alpha: float):
    key = ("cellpair", float(alpha))
    k = _KERNEL_CACHE.get(key)
    if k is not None:
        return k
    g = _neg_pow(alpha)

    @njit(parallel=True)
    def kernel(pts, totals, a0s, a1s, b0s, b1s, r0, g0, include_receiver, cap):
        m = a0s.shape[0]
        ok = np.ones(m, dtype=np.bool_)
        for e in prange(m):
            a0, a1 = a0s[e], a1s[e]
            b0, b1 = b0s[e], b1s[e]
            cnt = (a1 - a0) + (b1 - b0)
            if cnt < 2:
                continue
            good = True
            for jj in range(cnt):
                j = a0 + jj if jj < a1 - a0 else b0 + (jj - (a1 - a0))
                xj = pts[j, 0]
                yj = pts[j, 1]
                dmax = 0.0
                for ii in range(cnt):
                    if ii == jj:
                        continue
                    i = a0 + ii if ii < a1 - a0 else b0 + (ii - (a1 - a0))
                    dx = pts[i, 0] - xj
                    dy = pts[i, 1] - yj
                    d = np.sqrt(dx * dx + dy * dy)
                    if d > dmax:
                        dmax = d
                worst = totals[j] - g(r0 + dmax)
                if include_receiver:
                    worst += g0
                if worst >= cap:
                    good = False
                    break
            ok[e] = good
        return ok

    _KERNEL_CACHE[key] = kernel
    return kernel


def cell_pair_interference_ok(
    pts, totals, pair_starts_a, pair_ends_a, pair_starts_b, pair_ends_b,
    r0, alpha, g0, include_receiver, cap,
) -> np.ndarray:
    """For each cell pair, test the worst in-pair receiver interference
    (over ordered transmitter/receiver pairs) against the cap.

    Points must be ordered so each cell occupies a contiguous range.
    The worst transmitter for a receiver is the farthest one, so only
    the per-receiver maximum in-pair distance enters.  Vacuously true
    for pairs holding fewer than two nodes.
    """
    return _cell_pair_kernel(alpha)(
        pts, totals, pair_starts_a, pair_ends_a, pair_starts_b, pair_ends_b,
        r0, g0, include_receiver, cap,
    )


def _class_power_kernel(alpha: float, bounded: bool):
    key = ("classpower", float(alpha), bounded)
    k = _KERNEL_CACHE.get(key)
    if k is not None:
        return k
    g = _neg_pow(alpha)

    if bounded:
        @njit(parallel=True)
        def kernel(pts, colors, n_colors, r0):
            n = pts.shape[0]
            out = np.zeros((n, n_colors))
            for j in prange(n):
                xj = pts[j, 0]
                yj = pts[j, 1]
                for k in range(n):
                    if k == j:
                        continue
                    dx = pts[k, 0] - xj
                    dy = pts[k, 1] - yj
                    out[j, colors[k]] += g(r0 + np.sqrt(dx * dx + dy * dy))
            return out
    else:
        @njit(parallel=True)
        def kernel(pts, colors, n_colors, r0):
            n = pts.shape[0]
            out = np.zeros((n, n_colors))
            for j in prange(n):
                xj = pts[j, 0]
                yj = pts[j, 1]
                for k in range(n):
                    if k == j:
                        continue
                    dx = pts[k, 0] - xj
                    dy = pts[k, 1] - yj
                    out[j, colors[k]] += g(np.sqrt(dx * dx + dy * dy))
            return out

    _KERNEL_CACHE[key] = kernel
    return kernel


def color_class_power(
    pts: np.ndarray, colors: np.ndarray, n_colors: int, r0: float, alpha: float,
    bounded: bool,
) -> np.ndarray:
    """P[j, c] = sum over k != j with color c of g(d_kj)."""
    return _class_power_kernel(alpha, bounded)(pts, colors, n_colors, r0)


def _colored_adjacency_kernel(alpha: float, bounded: bool):
    key = ("coloredadj", float(alpha), bounded)
    k = _KERNEL_CACHE.get(key)
    if k is not None:
        return k
    g = _neg_pow(alpha)

    @njit(parallel=True)
    def kernel(pts, colors, class_power, threshold, r0, g0, include_receiver):
        n = pts.shape[0]
        adj = np.zeros((n, n), dtype=np.bool_)
        for i in prange(n):
            xi = pts[i, 0]
            yi = pts[i, 1]
            ci = colors[i]
            for j in range(n):
                if j == i:
                    continue
                dx = pts[j, 0] - xi
                dy = pts[j, 1] - yi
                d = np.sqrt(dx * dx + dy * dy)
                gij = g(r0 + d) if bounded else g(d)
                interference = class_power[j, ci] - gij
                if include_receiver and colors[j] == ci:
                    interference += g0
                if interference <= 0.0 or gij >= threshold * interference:
                    adj[i, j] = True
        return adj

    _KERNEL_CACHE[key] = kernel
    return kernel


def colored_adjacency(
    pts, colors, class_power, threshold, r0, alpha, bounded, g0, include_receiver,
) -> np.ndarray:
    """Dense boolean adjacency of the colored SIR graph.

    Edge (i, j) when g(d_ij) >= T * I with I the class-c(i) power at j
    minus the transmitter's own term (plus the receiver self term when
    the literal convention keeps it and the colors match).
    """
    return _colored_adjacency_kernel(alpha, bounded)(
        pts, colors, class_power, threshold, r0, g0, include_receiver
    )
