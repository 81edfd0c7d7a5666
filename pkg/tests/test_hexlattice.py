import math

import numpy as np
import pytest

from sirperc.attenuation import PowerLaw
from sirperc.geometry import Window, derive_trial_seed, poisson_process, sample
from sirperc.hexlattice import (
    AXIAL_DIRS,
    FaceClassification,
    HexConfig,
    SUBCRITICAL_TRIANGLE_THRESHOLD,
    classify_faces,
    closed_face_probability,
    find_closed_circuit,
    lambda_interval_subcritical,
    max_closed_face_probability,
    mu_of,
    validate_config,
    face_reports_csv,
)
from sirperc.sir_graph import SirGraphConfig, build

BIG_T = HexConfig(delta=1.0, rho=0.9, eta=1.0, threshold=100.0, alpha=4.0)


def _sector_centroid(cx, cy, k, delta=1.0):
    """Centroid of triangle k of the face centered at (cx, cy)."""
    ang = math.pi / 3.0 + k * math.pi / 3.0  # sector bisector at 60 + 60k degrees
    r = delta / math.sqrt(3.0)
    return cx + r * math.cos(ang), cy + r * math.sin(ang)


# --- scalar conditions and mu ---


def test_condition3_direct():
    # T = 16, alpha = 4, eta = 0.1: rho = 0.15 <= 0.1 * 2
    cfg = HexConfig(delta=1.0, rho=0.15, eta=0.1, threshold=16.0, alpha=4.0)
    assert validate_config(cfg).condition3_ok
    cfg_bad = HexConfig(delta=1.0, rho=0.25, eta=0.1, threshold=16.0, alpha=4.0)
    assert not validate_config(cfg_bad).condition3_ok


def test_condition3_eta_delta_T1():
    # T = 1 and eta = delta: condition reduces to rho <= delta, always true
    for rho in (0.1, 0.5, 0.99):
        cfg = HexConfig(delta=1.0, rho=rho, eta=1.0, threshold=1.0, alpha=4.0)
        assert validate_config(cfg).condition3_ok


def test_condition4_paper_remark_flag():
    cfg = HexConfig(delta=1.0, rho=0.5, eta=1.0, threshold=1.5, alpha=4.0)
    v = validate_config(cfg)
    assert v.condition4_paper_auto  # T > 1
    assert not validate_config(
        HexConfig(delta=1.0, rho=0.5, eta=1.0, threshold=0.5, alpha=4.0)
    ).condition4_paper_auto


def test_mu_limit_rho_zero():
    # degenerate inner triangle: distance from the triangle centroid to the
    # far vertices of the neighbor hexagon, sqrt(13/3) for unit edge
    cfg = HexConfig(delta=1.0, rho=1e-12, eta=1.0, threshold=100.0, alpha=4.0)
    assert mu_of(cfg) == pytest.approx(math.sqrt(13.0 / 3.0), abs=1e-9)


def test_mu_similarity_scaling():
    a = mu_of(HexConfig(delta=1.0, rho=0.2, eta=1.0, threshold=100.0, alpha=4.0))
    b = mu_of(HexConfig(delta=2.0, rho=0.4, eta=1.0, threshold=100.0, alpha=4.0))
    assert b == pytest.approx(2.0 * a, rel=1e-12)


def test_mu_dense_boundary_sampling_oracle():
    # the max distance between the convex regions is attained on their
    # boundaries; a dense boundary grid must approach the vertex-pair max
    cfg = HexConfig(delta=1.0, rho=0.2, eta=1.0, threshold=100.0, alpha=4.0)
    mu = mu_of(cfg)

    def polygon_boundary(verts, per_edge):
        pts = []
        m = len(verts)
        for i in range(m):
            a, b = np.asarray(verts[i]), np.asarray(verts[(i + 1) % m])
            t = np.linspace(0.0, 1.0, per_edge, endpoint=False)[:, None]
            pts.append(a + t * (b - a))
        return np.vstack(pts)

    ang = math.pi / 6.0 + np.arange(6) * math.pi / 3.0
    home = np.column_stack([np.cos(ang), np.sin(ang)])
    neighbor = home + [math.sqrt(3.0), 0.0]
    tri = np.array([[0.0, 0.0], [math.sqrt(3.0) / 2, -0.5], [math.sqrt(3.0) / 2, 0.5]])
    centroid = tri.mean(axis=0)
    inner = centroid + 0.2 * (tri - centroid)

    hex_b = np.vstack([polygon_boundary(home, 150), polygon_boundary(neighbor, 150)])
    tri_b = polygon_boundary(inner, 400)
    diff = tri_b[:, None, :] - hex_b[None, :, :]
    sampled = float(np.sqrt((diff ** 2).sum(axis=2)).max())
    assert sampled <= mu + 1e-12
    assert mu - sampled <= 1e-3


def test_invalid_geometry():
    with pytest.raises(ValueError):
        HexConfig(delta=1.0, rho=1.0, eta=1.0, threshold=1.0, alpha=4.0)
    with pytest.raises(ValueError):
        HexConfig(delta=-1.0, rho=0.5, eta=1.0, threshold=1.0, alpha=4.0)


# --- analytic closed-face probability ---


def test_probability_zero_at_lambda_zero():
    assert closed_face_probability(0.0, BIG_T).p_triangle == 0.0


def test_probability_vanishes_at_large_lambda():
    assert closed_face_probability(1e9, BIG_T).p_triangle < 1e-12


def test_probability_frozen_value():
    # 50-digit reference evaluation of the formula at lam = 50,
    # delta = 1, rho = 0.95, plus the frozen literal as a regression
    import mpmath as mp

    mp.mp.dps = 50
    lam = mp.mpf(50)
    b = mp.sqrt(3) / 4 * mp.mpf("0.95") ** 2
    a = mp.sqrt(3) / 4 * (1 - mp.mpf("0.95") ** 2)
    ref = float(mp.e ** (-lam * a) * (1 - mp.e ** (-lam * b) - lam * b * mp.e ** (-lam * b)))

    cfg = HexConfig(delta=1.0, rho=0.95, eta=1.0, threshold=100.0, alpha=4.0)
    assert cfg.inner_area == pytest.approx(float(b), abs=1e-15)
    assert cfg.annulus_area == pytest.approx(float(a), abs=1e-15)
    fp = closed_face_probability(50.0, cfg)
    assert fp.p_triangle == pytest.approx(ref, abs=1e-14)
    assert fp.p_triangle == pytest.approx(0.12112442101950741593, abs=1e-12)
    assert fp.p_face == pytest.approx(fp.p_triangle ** 6)


def test_probability_certified_zero_when_conditions_fail():
    cfg = HexConfig(delta=1.0, rho=0.9, eta=1.0, threshold=0.5, alpha=4.0)
    fp = closed_face_probability(3.0, cfg)
    assert not fp.conditions_ok
    assert fp.p_triangle > 0.0
    assert fp.certified_p_triangle == 0.0 and fp.certified_p_face == 0.0


def test_maximizer_brackets():
    cfg = HexConfig(delta=1.0, rho=0.8, eta=1.0, threshold=100.0, alpha=4.0)
    lam_star, p_star = max_closed_face_probability(cfg)
    for lam in (0.5 * lam_star, 2.0 * lam_star):
        assert closed_face_probability(lam, cfg).p_triangle < p_star


def test_interval_endpoints_meet_threshold():
    cfg = HexConfig(delta=1.0, rho=0.995, eta=1.0, threshold=100.0, alpha=4.0)
    iv = lambda_interval_subcritical(cfg)
    assert iv is not None
    for lam in iv:
        p = closed_face_probability(lam, cfg).p_triangle
        assert p == pytest.approx(SUBCRITICAL_TRIANGLE_THRESHOLD, abs=1e-9)


def test_interval_empty_when_max_below_threshold():
    # the annulus at rho = 0.99 is already too large: the formula's
    # maximum (~0.8708 by grid scan) stays below (1/2)^(1/6) ~ 0.8909
    cfg = HexConfig(delta=1.0, rho=0.99, eta=1.0, threshold=100.0, alpha=4.0)
    grid_max = max(
        closed_face_probability(lam, cfg).p_triangle for lam in np.linspace(0.01, 60, 4000)
    )
    assert grid_max < SUBCRITICAL_TRIANGLE_THRESHOLD
    assert lambda_interval_subcritical(cfg) is None


def test_interval_matches_grid_scan():
    cfg = HexConfig(delta=1.0, rho=0.995, eta=1.0, threshold=100.0, alpha=4.0)
    iv = lambda_interval_subcritical(cfg)
    lams = np.linspace(0.01, 80, 8000)
    above = [lam for lam in lams
             if closed_face_probability(lam, cfg).p_triangle > SUBCRITICAL_TRIANGLE_THRESHOLD]
    assert iv is not None and above
    assert iv[0] == pytest.approx(min(above), abs=0.02)
    assert iv[1] == pytest.approx(max(above), abs=0.02)


# --- classification ---


def test_empty_points_all_faces_open():
    w = Window(20.0, 20.0)
    cls = classify_faces(np.zeros((0, 2)), BIG_T, w)
    assert cls.n_faces > 0
    assert not cls.closed.any()
    assert (cls.inner_counts == 0).all()


def test_hand_built_closed_face():
    w = Window(20.0, 20.0)
    base = classify_faces(np.zeros((0, 2)), BIG_T, w)
    face = base.origin_face()
    cx, cy = base.center_of(face)
    pts = []
    for k in range(6):
        gx, gy = _sector_centroid(cx, cy, k)
        pts += [[gx + 0.01, gy], [gx - 0.01, gy]]
    cls = classify_faces(np.array(pts), BIG_T, w)
    i = cls.index_of(face)
    assert cls.closed[i]
    assert tuple(cls.inner_counts[i]) == (2,) * 6
    assert cls.annulus_empty[i].all()


def test_annulus_point_opens_triangle():
    w = Window(20.0, 20.0)
    base = classify_faces(np.zeros((0, 2)), BIG_T, w)
    face = base.origin_face()
    cx, cy = base.center_of(face)
    pts = []
    for k in range(6):
        gx, gy = _sector_centroid(cx, cy, k)
        pts += [[gx + 0.01, gy], [gx - 0.01, gy]]
    # a point in triangle 0 outside the inner triangle: near the face center
    pts.append([cx + 0.02 * math.cos(math.pi / 3), cy + 0.02 * math.sin(math.pi / 3)])
    cls = classify_faces(np.array(pts), BIG_T, w)
    i = cls.index_of(face)
    assert not cls.annulus_empty[i][0]
    assert not cls.closed[i]
    assert cls.triangle_closed[i][1:].all()


def test_empirical_triangle_frequency_matches_formula():
    cfg = HexConfig(delta=1.0, rho=0.9, eta=1.0, threshold=100.0, alpha=4.0)
    lam = 3.3602  # rising-branch solution of p_triangle = 0.25
    p = closed_face_probability(lam, cfg).p_triangle
    w = Window(2.0, 2.6)
    base = classify_faces(np.zeros((0, 2)), cfg, w)
    face = base.origin_face()
    trials = 4000
    closed = 0
    for k in range(trials):
        pts = sample(poisson_process(lam, derive_trial_seed(515, k)), w)
        cls = classify_faces(pts, cfg, w)
        closed += int(cls.triangle_closed[cls.index_of(face)].sum())
    freq = closed / (6 * trials)
    se = math.sqrt(p * (1 - p) / (6 * trials))
    assert abs(freq - p) <= 3 * se


def test_empirical_face_frequency_sixth_power():
    # high closed probability so the face event is actually exercised
    cfg = HexConfig(delta=1.0, rho=0.95, eta=1.0, threshold=100.0, alpha=4.0)
    lam, p = max_closed_face_probability(cfg)
    w = Window(2.0, 2.6)
    base = classify_faces(np.zeros((0, 2)), cfg, w)
    face = base.origin_face()
    trials = 4000
    tri = 0
    closed = 0
    for k in range(trials):
        pts = sample(poisson_process(lam, derive_trial_seed(717, k)), w)
        cls = classify_faces(pts, cfg, w)
        i = cls.index_of(face)
        tri += int(cls.triangle_closed[i].sum())
        closed += int(cls.closed[i])
    p6 = p ** 6
    se = math.sqrt(p6 * (1 - p6) / trials)
    assert abs(closed / trials - p6) <= 3 * se
    se_t = math.sqrt(p * (1 - p) / (6 * trials))
    assert abs(tri / (6 * trials) - p) <= 3 * se_t


def test_window_too_small():
    with pytest.raises(ValueError):
        classify_faces(np.zeros((0, 2)), BIG_T, Window(1.0, 1.0))


def test_face_csv_format():
    w = Window(8.0, 8.0)
    cls = classify_faces(np.zeros((0, 2)), BIG_T, w)
    text = face_reports_csv(cls)
    lines = text.strip().split("\n")
    assert lines[0] == "face_q,face_r,closed,tri0,tri1,tri2,tri3,tri4,tri5"
    assert len(lines) == cls.n_faces + 1
    assert all(len(ln.split(",")) == 9 for ln in lines[1:])


# --- circuit detection ---


def test_minimal_ring():
    w = Window(20.0, 20.0)
    base = classify_faces(np.zeros((0, 2)), BIG_T, w)
    origin = base.origin_face()
    mask = np.ones(base.n_faces, bool)
    mask[base.index_of(origin)] = False
    cls = FaceClassification.from_closed_mask(BIG_T, w, base.faces, mask)
    ring = find_closed_circuit(cls, origin)
    expected = sorted((origin[0] + dq, origin[1] + dr) for dq, dr in AXIAL_DIRS)
    assert sorted(ring) == expected


def test_all_open_no_circuit():
    w = Window(20.0, 20.0)
    base = classify_faces(np.zeros((0, 2)), BIG_T, w)
    cls = FaceClassification.from_closed_mask(BIG_T, w, base.faces,
                                              np.zeros(base.n_faces, bool))
    assert find_closed_circuit(cls) is None


def test_circuit_validity_random():
    w = Window(20.0, 20.0)
    base = classify_faces(np.zeros((0, 2)), BIG_T, w)
    origin = base.origin_face()
    rng = np.random.default_rng(7)
    found = 0
    for _ in range(300):
        mask = rng.random(base.n_faces) < 0.6
        cls = FaceClassification.from_closed_mask(BIG_T, w, base.faces, mask)
        ring = find_closed_circuit(cls, origin)
        if ring is None:
            continue
        found += 1
        assert all(cls.is_closed(f) for f in ring)
        for a, b in zip(ring, ring[1:] + ring[:1]):
            assert (b[0] - a[0], b[1] - a[1]) in AXIAL_DIRS
        # the ring encloses the origin center (shapely winding test)
        from shapely.geometry import Point, Polygon

        poly = Polygon([cls.center_of(f) for f in ring])
        assert poly.contains(Point(cls.center_of(origin)))
    assert found > 50


def test_enclosure_frequency_supercritical():
    # closed faces super-critical at p = 0.7: enclosure is near-certain
    # on a 40x40-face window (baseline run: 1000/1000)
    w = Window(40 * math.sqrt(3) + 2, 40 * 1.5 + 3)
    base = classify_faces(np.zeros((0, 2)), BIG_T, w)
    origin = base.origin_face()
    rng = np.random.default_rng(11)
    hits = sum(
        find_closed_circuit(
            FaceClassification.from_closed_mask(
                BIG_T, w, base.faces, rng.random(base.n_faces) < 0.7),
            origin,
        )
        is not None
        for _ in range(400)
    )
    assert hits / 400 > 0.95


def _uniform_in_triangle(rng, verts):
    r1, r2 = rng.random(), rng.random()
    s = math.sqrt(r1)
    a, b, c = verts
    return (1 - s) * a + s * (1 - r2) * b + s * r2 * c


def test_closed_face_blocks_sir_edges():
    # conditions 3-4 hold at T = 25, rho = 0.2, eta = 0.1, and eta stays
    # below the annulus gap (delta - rho)/(2 sqrt 3): for a closed face,
    # no SIR edge connects its inside to the adjacent hexagons, nor
    # opposite adjacent hexagons to each other.  Closed faces are
    # constructed (two points per inner triangle, outside points kept
    # off the face) because they are astronomically rare in this regime.
    cfg = HexConfig(delta=1.0, rho=0.2, eta=0.1, threshold=25.0, alpha=4.0)
    assert validate_config(cfg).ok
    assert cfg.eta <= (cfg.delta - cfg.rho) / (2 * math.sqrt(3.0))
    w = Window(12.0, 12.0)
    model = PowerLaw(4.0)
    gcfg = SirGraphConfig(25.0)
    rng = np.random.default_rng(808)
    from sirperc.hexlattice import _axial_round

    checked = 0
    for _ in range(60):
        base = classify_faces(np.zeros((0, 2)), cfg, w)
        face = base.origin_face()
        cx, cy = base.center_of(face)
        pts = []
        for k in range(6):
            ang0 = math.pi / 6.0 + k * math.pi / 3.0
            v0 = np.array([cx, cy])
            v1 = v0 + np.array([math.cos(ang0), math.sin(ang0)])
            v2 = v0 + np.array([math.cos(ang0 + math.pi / 3), math.sin(ang0 + math.pi / 3)])
            g = (v0 + v1 + v2) / 3.0
            inner = [g + cfg.rho * (v - g) for v in (v0, v1, v2)]
            for _ in range(2):
                pts.append(_uniform_in_triangle(rng, inner))
        # background nodes anywhere off the origin face
        lam_bg = 10.0
        n_bg = rng.poisson(lam_bg * w.area)
        cand = rng.random((n_bg, 2)) * [w.width, w.height]
        rf = cand[:, 1] / 1.5
        qf = cand[:, 0] / math.sqrt(3.0) - rf / 2.0
        q_i, r_i = _axial_round(qf, rf)
        keep = ~((q_i == face[0]) & (r_i == face[1]))
        pts = np.vstack([pts, cand[keep]])

        cls = classify_faces(pts, cfg, w)
        assert cls.is_closed(face)
        graph = build(pts, model, gcfg)

        rf = pts[:, 1] / 1.5
        qf = pts[:, 0] / math.sqrt(3.0) - rf / 2.0
        q_i, r_i = _axial_round(qf, rf)
        inside = [m for m in range(len(pts))
                  if (q_i[m], r_i[m]) == face]
        nbr_nodes = {
            d: [m for m in range(len(pts))
                if (q_i[m], r_i[m]) == (face[0] + d[0], face[1] + d[1])]
            for d in AXIAL_DIRS
        }
        for d in AXIAL_DIRS:
            for a in inside:
                for b in nbr_nodes[d]:
                    checked += 1
                    assert not graph.has_edge(a, b)
                    assert not graph.has_edge(b, a)
            opp = (-d[0], -d[1])
            for a in nbr_nodes[d]:
                for b in nbr_nodes[opp]:
                    if a == b:
                        continue
                    checked += 1
                    assert not graph.has_edge(a, b)
    assert checked > 1000
