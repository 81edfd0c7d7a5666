import math

import numpy as np
import pytest
from numba import njit, prange

from sirperc.attenuation import BoundedPowerLaw, PowerLaw
from sirperc.geometry import Window
from sirperc.sir_graph import (
    SirGraphConfig,
    build,
    components,
    export_edge_list,
    is_strongly_connected,
    origin_component_reach,
    sir,
)

LINE3 = np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]])


# --- definitional triple-loop oracle (independent of the library path) ---

@njit(cache=True, parallel=True)
def _brute_adjacency(pts, r0, alpha, bounded, threshold, exclude_receiver):
    n = pts.shape[0]
    adj = np.zeros((n, n), dtype=np.bool_)
    for i in prange(n):
        for j in range(n):
            if i == j:
                continue
            dx = pts[i, 0] - pts[j, 0]
            dy = pts[i, 1] - pts[j, 1]
            d_ij = np.sqrt(dx * dx + dy * dy)
            gij = (r0 + d_ij) ** (-alpha) if bounded else d_ij ** (-alpha)
            interference = 0.0
            for k in range(n):
                if k == i or (exclude_receiver and k == j):
                    continue
                ddx = pts[k, 0] - pts[j, 0]
                ddy = pts[k, 1] - pts[j, 1]
                d = np.sqrt(ddx * ddx + ddy * ddy)
                if bounded:
                    interference += (r0 + d) ** (-alpha)
                elif d == 0.0:
                    interference = np.inf
                else:
                    interference += d ** (-alpha)
            if interference <= 0.0 or gij >= threshold * interference:
                adj[i, j] = True
    return adj


def brute_force_edges(pts, model, config):
    bounded = model.bounded
    r0 = model.r0 if bounded else 0.0
    if config.threshold == 0.0:
        n = len(pts)
        return {(i, j) for i in range(n) for j in range(n) if i != j}
    adj = _brute_adjacency(np.asarray(pts, float), r0, model.alpha, bounded,
                           config.threshold, config.exclude_receiver)
    return {(int(i), int(j)) for i, j in zip(*np.nonzero(adj))}


def test_line3_sir_values():
    m = PowerLaw(2.0)
    cfg = SirGraphConfig(1.0)
    assert sir(LINE3, m, 0, 1, cfg) == pytest.approx(4.0)
    assert sir(LINE3, m, 1, 2, cfg) == pytest.approx(9.0 / 4.0)
    assert sir(LINE3, m, 2, 1, cfg) == pytest.approx(1.0 / 4.0)
    assert sir(LINE3, m, 0, 2, cfg) == pytest.approx(4.0 / 9.0)


def test_two_points_infinite_sir():
    pts = np.array([[0.0, 0.0], [1.0, 0.0]])
    cfg = SirGraphConfig(5.0)
    assert sir(pts, PowerLaw(3.0), 0, 1, cfg) == math.inf
    assert sir(pts, PowerLaw(3.0), 1, 0, cfg) == math.inf


def test_sir_usage_errors():
    cfg = SirGraphConfig(1.0)
    with pytest.raises(ValueError):
        sir(LINE3, PowerLaw(2.0), 1, 1, cfg)
    coincident = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    # receiver 1 sits on top of node 0: the interference sum hits g(0)
    with pytest.raises(ValueError):
        sir(coincident, PowerLaw(2.0), 2, 1, cfg)
    with pytest.raises(ValueError):
        build(coincident, PowerLaw(2.0), cfg)


def test_line3_edge_set():
    g = build(LINE3, PowerLaw(2.0), SirGraphConfig(1.0))
    assert g.edge_set() == {(0, 1), (1, 0), (1, 2)}


def test_threshold_zero_complete_digraph():
    rng = np.random.default_rng(2)
    pts = rng.random((10, 2))
    g = build(pts, PowerLaw(4.0), SirGraphConfig(0.0))
    assert g.n_edges == 90
    rep = components(g, 0)
    assert rep.out_component == frozenset(range(1, 10))
    assert rep.either_component == frozenset(range(1, 10))
    assert is_strongly_connected(g)


def test_single_node():
    g = build(np.array([[0.5, 0.5]]), PowerLaw(4.0), SirGraphConfig(1.0))
    assert g.n_edges == 0
    assert is_strongly_connected(g)


def test_components_line3():
    g = build(LINE3, PowerLaw(2.0), SirGraphConfig(1.0))
    rep = components(g, 0)
    assert rep.out_component == frozenset({1, 2})
    assert rep.in_component == frozenset({1})
    assert rep.bidirectional_component == frozenset({1})
    assert rep.either_component == frozenset({1, 2})
    assert not is_strongly_connected(g)
    with pytest.raises(IndexError):
        components(g, 17)


def test_empty_edge_set_components():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    g = build(pts, PowerLaw(4.0), SirGraphConfig(1e12))
    rep = components(g, 1)
    assert not rep.out_component and not rep.in_component
    assert not rep.either_component


def test_oracle_equivalence_random():
    rng = np.random.default_rng(42)
    m = PowerLaw(3.0)
    for _ in range(10):
        n = int(rng.integers(2, 120))
        pts = rng.random((n, 2)) * 4.0
        cfg = SirGraphConfig(float(rng.choice([0.2, 1.0, 4.0])))
        g = build(pts, m, cfg)
        assert g.edge_set() == brute_force_edges(pts, m, cfg)


def test_monotone_in_threshold():
    rng = np.random.default_rng(21)
    pts = rng.random((60, 2)) * 3.0
    m = BoundedPowerLaw(4.0, 1.0)
    prev = None
    for T in (0.1, 0.5, 1.0, 3.0, 10.0):
        edges = build(pts, m, SirGraphConfig(T)).edge_set()
        if prev is not None:
            assert edges <= prev
        prev = edges


def test_scale_invariance_power_law():
    rng = np.random.default_rng(31)
    pts = rng.random((50, 2)) * 2.0
    m = PowerLaw(4.0)
    cfg = SirGraphConfig(0.8)
    base = build(pts, m, cfg).edge_set()
    for gamma in (0.5, 2.0, 7.3):
        assert build(pts * gamma, m, cfg).edge_set() == base


def test_include_receiver_power_law_degenerate():
    # the literal convention keeps the receiver's own infinite self term,
    # so SIR is identically zero: no edges at T > 0
    cfg = SirGraphConfig(0.5, exclude_receiver=False)
    g = build(LINE3, PowerLaw(2.0), cfg)
    assert g.n_edges == 0
    assert sir(LINE3, PowerLaw(2.0), 0, 1, cfg) == 0.0


def test_include_receiver_bounded():
    cfg_ex = SirGraphConfig(1.0, exclude_receiver=True)
    cfg_in = SirGraphConfig(1.0, exclude_receiver=False)
    m = BoundedPowerLaw(4.0, 1.0)
    rng = np.random.default_rng(6)
    pts = rng.random((30, 2))
    e_in = build(pts, m, cfg_in).edge_set()
    e_ex = build(pts, m, cfg_ex).edge_set()
    assert e_in <= e_ex  # extra interference only removes edges
    assert e_in == brute_force_edges(pts, m, cfg_in)


def test_export_edge_list_format():
    g = build(LINE3, PowerLaw(2.0), SirGraphConfig(1.0))
    text = export_edge_list(g)
    lines = text.strip().split("\n")
    assert len(lines) == 3
    i, j, v = lines[0].split()
    assert (int(i), int(j)) == (0, 1)
    assert float(v) == pytest.approx(4.0)
    assert "e" in v  # scientific notation


def test_adjacency_sorted():
    rng = np.random.default_rng(9)
    pts = rng.random((40, 2))
    g = build(pts, PowerLaw(4.0), SirGraphConfig(0.5))
    for row in g.out_adjacency:
        assert np.all(np.diff(row) > 0)


def test_origin_component_reach_matches_dense():
    rng = np.random.default_rng(55)
    m = PowerLaw(4.0)
    w = Window(4.0, 4.0)
    for t in range(40):
        n = int(rng.integers(2, 150))
        pts = rng.random((n, 2)) * 4.0
        cfg = SirGraphConfig(float(rng.choice([2.0, 10.0, 40.0])))
        root = int(rng.integers(0, n))
        dense = set(components(build(pts, m, cfg), root).out_component) | {root}
        lazy, _ = origin_component_reach(pts, m, cfg, root, w, margin=0.05)
        assert lazy == dense


def test_origin_component_reach_rejects_tiny_threshold():
    pts = np.random.default_rng(1).random((10, 2))
    with pytest.raises(ValueError):
        origin_component_reach(pts, PowerLaw(4.0), SirGraphConfig(1e-9), 0,
                               Window(1.0, 1.0), 0.1)
