"""Hexagonal-lattice mapping for the sub-critical certificate.

The plane is tiled by pointy-top regular hexagons of edge ``delta``;
axial coordinates (q, r) give face centers at
(sqrt(3)*delta*(q + r/2), 1.5*delta*r).  Each face splits into six
equilateral center triangles of side delta, one per 60-degree sector,
and each triangle carries a concentric, co-oriented inner triangle of
side ``rho``.  A triangle is closed when its annulus (triangle minus
inner triangle) holds no points and its inner triangle holds at least
two; a face is closed when all six triangles are.

A ring of closed faces around the origin face certifies that points
inside cannot join an unbounded cluster, provided the deterministic
scalar conditions on (rho, eta, T) and on (mu, delta, T) hold; those
conditions are evaluated and reported but never block the purely
geometric classification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .geometry import Window

__all__ = [
    "HexConfig",
    "HexValidity",
    "FaceProbability",
    "FaceClassification",
    "FaceReport",
    "mu_of",
    "validate_config",
    "classify_faces",
    "closed_face_probability",
    "max_closed_face_probability",
    "lambda_interval_subcritical",
    "find_closed_circuit",
    "face_reports_csv",
]

SQRT3 = math.sqrt(3.0)
TRIANGLE_AREA_FACTOR = SQRT3 / 4.0  # area of an equilateral triangle of unit side

# Axial neighbor steps, counterclockwise starting east.
AXIAL_DIRS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))

# Pointy-top corner offsets in half-units of (sqrt(3)/2 * delta, delta/2):
# integer keys shared exactly between adjacent faces.
_CORNER_STEPS = ((1, 1), (0, 2), (-1, 1), (-1, -1), (0, -2), (1, -1))


@dataclass(frozen=True)
class HexConfig:
    """Tiling and threshold parameters for face classification."""

    delta: float
    rho: float
    eta: float
    threshold: float
    alpha: float

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"delta must be finite and positive, got {self.delta}")
        if not (0 < self.rho < self.delta):
            raise ValueError(f"rho must satisfy 0 < rho < delta, got {self.rho}")
        if not (math.isfinite(self.eta) and self.eta > 0):
            raise ValueError(f"eta must be finite and positive, got {self.eta}")
        if not (math.isfinite(self.threshold) and self.threshold >= 0):
            raise ValueError(f"threshold must be finite and >= 0, got {self.threshold}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be finite and positive, got {self.alpha}")

    @property
    def annulus_area(self) -> float:
        return TRIANGLE_AREA_FACTOR * (self.delta ** 2 - self.rho ** 2)

    @property
    def inner_area(self) -> float:
        return TRIANGLE_AREA_FACTOR * self.rho ** 2


@dataclass(frozen=True)
class HexValidity:
    """Outcome of the deterministic scalar conditions.

    condition4_paper_auto records the remark that the mu condition is
    automatic for T > 1 under a construction with mu <= delta; our mu
    (vertex-pair bound against the two adjacent hexagons) exceeds delta,
    so the flag is reported separately from the computed condition.
    """

    condition3_ok: bool
    condition4_ok: bool
    condition4_paper_auto: bool
    mu: float

    @property
    def ok(self) -> bool:
        return self.condition3_ok and self.condition4_ok


@dataclass(frozen=True)
class FaceProbability:
    """Analytic closed-triangle/closed-face probabilities.

    p_triangle and p_face always carry the raw formula value; the
    certified values are zeroed when the scalar conditions fail, since
    a face then cannot be certified closed in the SIR sense.
    """

    p_triangle: float
    p_face: float
    conditions_ok: bool

    @property
    def certified_p_triangle(self) -> float:
        return self.p_triangle if self.conditions_ok else 0.0

    @property
    def certified_p_face(self) -> float:
        return self.p_face if self.conditions_ok else 0.0


def _hexagon_vertices(center_x: float, center_y: float, delta: float) -> np.ndarray:
    k = np.arange(6)
    ang = math.pi / 6.0 + k * math.pi / 3.0
    return np.column_stack([center_x + delta * np.cos(ang), center_y + delta * np.sin(ang)])


def mu_of(config: HexConfig) -> float:
    """Largest distance from an inner-triangle vertex to a vertex of the
    two hexagons adjacent to that triangle's base edge.

    The triangle of a face sits on one lattice edge, shared by the home
    hexagon and one neighbor; every point of the inner triangle is
    within mu of every point of those two hexagons.  Both regions are
    convex polygons, so the maximum over the regions is attained at a
    vertex pair.  Scales linearly: mu(2 delta, 2 rho) = 2 mu(delta, rho).
    """
    d, rho = config.delta, config.rho
    home = _hexagon_vertices(0.0, 0.0, d)
    neighbor = _hexagon_vertices(SQRT3 * d, 0.0, d)
    tri = np.array([[0.0, 0.0], [SQRT3 / 2.0 * d, -0.5 * d], [SQRT3 / 2.0 * d, 0.5 * d]])
    centroid = tri.mean(axis=0)
    inner = centroid + (rho / d) * (tri - centroid)
    hex_pts = np.vstack([home, neighbor])
    diff = inner[:, None, :] - hex_pts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=2)).max())


def validate_config(config: HexConfig) -> HexValidity:
    """Evaluate the scalar closed-face conditions; reports, never raises."""
    t_pow = config.threshold ** (1.0 / config.alpha)
    mu = mu_of(config)
    return HexValidity(
        condition3_ok=config.rho <= config.eta * t_pow,
        condition4_ok=mu <= config.delta * t_pow,
        condition4_paper_auto=config.threshold > 1.0,
        mu=mu,
    )


# ---------------------------------------------------------------------------
# analytic closed-face probability


def _p_triangle(lam: float, a: float, b: float) -> float:
    """exp(-lam a) * (1 - exp(-lam b) - lam b exp(-lam b)) with a, b the
    annulus and inner-triangle areas."""
    return math.exp(-lam * a) * (1.0 - math.exp(-lam * b) - lam * b * math.exp(-lam * b))


def closed_face_probability(lam: float, config: HexConfig) -> FaceProbability:
    """Analytic probability that one triangle (and the whole face) is closed.

    Triangle events within a face are independent (disjoint regions of a
    Poisson process), so the face probability is the sixth power.
    """
    if not (math.isfinite(lam) and lam >= 0):
        raise ValueError(f"lambda must be finite and >= 0, got {lam}")
    p_tri = _p_triangle(lam, config.annulus_area, config.inner_area)
    p_tri = max(p_tri, 0.0)
    return FaceProbability(
        p_triangle=p_tri,
        p_face=p_tri ** 6,
        conditions_ok=validate_config(config).ok,
    )


def max_closed_face_probability(config: HexConfig) -> tuple[float, float]:
    """(lambda*, p_triangle(lambda*)) maximizing the closed-triangle formula.

    With a, b the annulus and inner areas, the derivative sign equals
    h(lam) - a where h(lam) = exp(-lam b) (a + lam b (a+b)); h rises to
    a single peak at 1/(a+b) and then decays to zero, so the maximizer
    is the unique root of h = a beyond the peak.
    """
    a, b = config.annulus_area, config.inner_area

    def h(lam: float) -> float:
        return math.exp(-lam * b) * (a + lam * b * (a + b))

    lam0 = 1.0 / (a + b)
    hi = 2.0 * lam0
    while h(hi) >= a:
        hi *= 2.0
        if hi > 1e18:
            raise RuntimeError("failed to bracket the closed-face maximizer")
    lam_star = brentq(lambda x: h(x) - a, lam0, hi, xtol=1e-14, rtol=8.9e-16)
    return float(lam_star), _p_triangle(lam_star, a, b)


SUBCRITICAL_TRIANGLE_THRESHOLD = 0.5 ** (1.0 / 6.0)


def lambda_interval_subcritical(config: HexConfig) -> tuple[float, float] | None:
    """The lambda interval where P(closed triangle) exceeds (1/2)^(1/6).

    Above that level the closed-face probability exceeds 1/2, the
    super-critical regime for closed faces, so a closed circuit
    surrounds the origin almost surely on the infinite lattice.  Returns
    None when the formula's maximum stays below the threshold.  The
    interval certifies sub-criticality of the point process only when
    the scalar conditions also hold (see validate_config).
    """
    a, b = config.annulus_area, config.inner_area
    tau = SUBCRITICAL_TRIANGLE_THRESHOLD
    lam_star, p_max = max_closed_face_probability(config)
    if p_max <= tau:
        return None
    f = lambda lam: _p_triangle(lam, a, b) - tau
    lo = brentq(f, 1e-12 * lam_star, lam_star, xtol=1e-15, rtol=8.9e-16)
    hi_bracket = 2.0 * lam_star
    while f(hi_bracket) >= 0:
        hi_bracket *= 2.0
    hi = brentq(f, lam_star, hi_bracket, xtol=1e-15, rtol=8.9e-16)
    return float(lo), float(hi)


# ---------------------------------------------------------------------------
# classification of realizations


@dataclass(frozen=True)
class FaceReport:
    """Per-face classification with the six per-triangle breakdowns."""

    face: tuple[int, int]
    closed: bool
    annulus_empty: tuple[bool, ...]
    inner_counts: tuple[int, ...]

    @property
    def triangles_closed(self) -> tuple[bool, ...]:
        return tuple(
            bool(e and c >= 2) for e, c in zip(self.annulus_empty, self.inner_counts)
        )


class FaceClassification:
    """Array-backed classification of every face fully inside a window."""

    def __init__(self, config: HexConfig, window: Window,
                 faces: np.ndarray, inner_counts: np.ndarray, total_counts: np.ndarray):
        self.config = config
        self.window = window
        self.faces = faces  # (n_faces, 2) axial coords
        self.inner_counts = inner_counts  # (n_faces, 6)
        self.total_counts = total_counts  # (n_faces, 6)
        self.annulus_empty = total_counts == inner_counts
        self.triangle_closed = self.annulus_empty & (inner_counts >= 2)
        self.closed = self.triangle_closed.all(axis=1)
        self._index = {(int(q), int(r)): i for i, (q, r) in enumerate(faces)}

    @classmethod
    def from_closed_mask(
        cls, config: HexConfig, window: Window, faces: np.ndarray, closed: np.ndarray
    ) -> "FaceClassification":
        """Synthetic classification from a per-face closed mask (closed
        faces get two inner points per triangle, open faces none)."""
        closed = np.asarray(closed, dtype=bool)
        inner = np.where(closed[:, None], 2, 0).astype(np.int64) * np.ones(6, dtype=np.int64)
        return cls(config, window, np.asarray(faces, dtype=np.int64), inner, inner.copy())

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def index_of(self, face: tuple[int, int]) -> int:
        try:
            return self._index[face]
        except KeyError:
            raise KeyError(f"face {face} is not inside the classified window") from None

    def contains(self, face: tuple[int, int]) -> bool:
        return face in self._index

    def is_closed(self, face: tuple[int, int]) -> bool:
        return bool(self.closed[self.index_of(face)])

    def center_of(self, face: tuple[int, int]) -> tuple[float, float]:
        q, r = face
        d = self.config.delta
        return (SQRT3 * d * (q + r / 2.0), 1.5 * d * r)

    def origin_face(self) -> tuple[int, int]:
        """Face whose center is nearest the window center."""
        cx, cy = self.window.width / 2.0, self.window.height / 2.0
        centers = self.face_centers()
        i = int(np.argmin((centers[:, 0] - cx) ** 2 + (centers[:, 1] - cy) ** 2))
        return (int(self.faces[i, 0]), int(self.faces[i, 1]))

    def face_centers(self) -> np.ndarray:
        d = self.config.delta
        q = self.faces[:, 0].astype(np.float64)
        r = self.faces[:, 1].astype(np.float64)
        return np.column_stack([SQRT3 * d * (q + r / 2.0), 1.5 * d * r])

    def is_region_boundary(self, face: tuple[int, int]) -> bool:
        """True when some edge-neighbor of the face lies outside the region."""
        q, r = face
        return any((q + dq, r + dr) not in self._index for dq, dr in AXIAL_DIRS)

    def reports(self) -> list[FaceReport]:
        return [
            FaceReport(
                face=(int(q), int(r)),
                closed=bool(self.closed[i]),
                annulus_empty=tuple(bool(x) for x in self.annulus_empty[i]),
                inner_counts=tuple(int(x) for x in self.inner_counts[i]),
            )
            for i, (q, r) in enumerate(self.faces)
        ]


def _axial_round(qf: np.ndarray, rf: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Round fractional axial coordinates to the containing hexagon."""
    xf = qf
    zf = rf
    yf = -xf - zf
    rx = np.round(xf)
    ry = np.round(yf)
    rz = np.round(zf)
    dx = np.abs(rx - xf)
    dy = np.abs(ry - yf)
    dz = np.abs(rz - zf)
    fix_x = (dx > dy) & (dx > dz)
    fix_z = ~fix_x & (dz > dy)
    rx = np.where(fix_x, -ry - rz, rx)
    rz = np.where(fix_z, -rx - ry, rz)
    return rx.astype(np.int64), rz.astype(np.int64)


def classify_faces(points, config: HexConfig, window: Window) -> FaceClassification:
    """Classify every face fully inside the window against a realization.

    Faces partially outside the window are excluded (conservatively
    treated as open by circuit detection).  Membership tests are exact
    sign tests; each point lands in exactly one sector triangle of its
    nearest face.
    """
    d = config.delta
    # face fully inside: all vertices within the window
    r_lo = math.ceil(1.0 / 1.5 + 1e-12)
    r_hi = math.floor((window.height / d - 1.0) / 1.5 + 1e-12)
    if r_hi < r_lo:
        raise ValueError("window is too small to contain a single hexagonal face")
    face_list = []
    row_qlo = {}
    row_offset = {}
    for r in range(r_lo, r_hi + 1):
        q_lo = math.ceil(0.5 - r / 2.0 - 1e-12)
        q_hi = math.floor(window.width / (SQRT3 * d) - 0.5 - r / 2.0 + 1e-12)
        if q_hi < q_lo:
            continue
        row_qlo[r] = q_lo
        row_offset[r] = len(face_list)
        face_list.extend((q, r) for q in range(q_lo, q_hi + 1))
    if not face_list:
        raise ValueError("window is too small to contain a single hexagonal face")
    faces = np.array(face_list, dtype=np.int64)

    n_rows = r_hi - r_lo + 1
    qlo_arr = np.full(n_rows, np.iinfo(np.int64).max // 4, dtype=np.int64)
    off_arr = np.full(n_rows, -1, dtype=np.int64)
    len_arr = np.zeros(n_rows, dtype=np.int64)
    for r, off in row_offset.items():
        qlo_arr[r - r_lo] = row_qlo[r]
        off_arr[r - r_lo] = off
    counts = np.bincount(faces[:, 1] - r_lo, minlength=n_rows)
    len_arr[: len(counts)] = counts

    inner_counts = np.zeros((len(faces), 6), dtype=np.int64)
    total_counts = np.zeros((len(faces), 6), dtype=np.int64)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts):
        rf = pts[:, 1] / (1.5 * d)
        qf = pts[:, 0] / (SQRT3 * d) - rf / 2.0
        q_i, r_i = _axial_round(qf, rf)
        cx = SQRT3 * d * (q_i + r_i / 2.0)
        cy = 1.5 * d * r_i
        lx = pts[:, 0] - cx
        ly = pts[:, 1] - cy
        theta = np.arctan2(ly, lx)
        sector = np.floor((theta - math.pi / 6.0) / (math.pi / 3.0)).astype(np.int64) % 6

        # rotate into sector 0 ([30, 90) degrees), whose triangle is
        # (0,0), (sqrt3/2, 1/2) d, (0, 1) d
        ang = sector * (math.pi / 3.0)
        ca, sa = np.cos(ang), np.sin(ang)
        rx = ca * lx + sa * ly
        ry = -sa * lx + ca * ly

        # inner-triangle test: dilate about the centroid by delta/rho and
        # test against the sector-0 triangle
        gx, gy = SQRT3 / 6.0 * d, 0.5 * d
        scale = d / config.rho
        px = gx + scale * (rx - gx)
        py = gy + scale * (ry - gy)
        v1x, v1y = SQRT3 / 2.0 * d, 0.5 * d
        v2x, v2y = 0.0, d
        s0 = v1x * py - v1y * px                      # cross(v1 - 0, p - 0)
        s1 = (v2x - v1x) * (py - v1y) - (v2y - v1y) * (px - v1x)
        s2 = v2x * py - v2y * px                      # cross(0 - v2, p - v2), flipped
        in_inner = (s0 >= 0) & (s1 >= 0) & (s2 <= 0)

        row = r_i - r_lo
        row_ok = (row >= 0) & (row < n_rows)
        row_c = np.clip(row, 0, n_rows - 1)
        col = q_i - qlo_arr[row_c]
        keep = row_ok & (off_arr[row_c] >= 0) & (col >= 0) & (col < len_arr[row_c])
        face_idx = np.where(keep, off_arr[row_c] + col, -1)
        flat = face_idx[keep] * 6 + sector[keep]
        total_counts = np.bincount(flat, minlength=len(faces) * 6).reshape(len(faces), 6)
        inner_counts = np.bincount(
            flat[in_inner[keep]], minlength=len(faces) * 6
        ).reshape(len(faces), 6)

    return FaceClassification(config, window, faces, inner_counts, total_counts)


# ---------------------------------------------------------------------------
# circuit detection


def _face_corners(q: int, r: int) -> list[tuple[int, int]]:
    """Integer corner keys of a face, counterclockwise from the east corner.

    Keys live on the half-unit grid (sqrt(3)/2 delta, delta/2), where
    the face center is (2q + r, 3r); adjacent faces share exact keys.
    """
    cu, cv = 2 * q + r, 3 * r
    return [(cu + du, cv + dv) for du, dv in _CORNER_STEPS]


def _shared_edge(q: int, r: int, direction: int) -> tuple[tuple[int, int], tuple[int, int]]:
    """Corner keys of the edge between face (q, r) and its neighbor in
    AXIAL_DIRS[direction], ordered counterclockwise around (q, r)."""
    corners = _face_corners(q, r)
    # neighbor 0 (east) shares corners 5 and 0; neighbor k shares k-1+... :
    # direction k edge runs from corner (k+5)%6 to corner k
    return corners[(direction + 5) % 6], corners[direction]


def find_closed_circuit(
    classification: FaceClassification, origin_face: tuple[int, int] | None = None
) -> list[tuple[int, int]] | None:
    """A cycle of edge-adjacent closed faces enclosing the origin face, or None.

    The origin face is enclosed exactly when the region reachable from
    it through open faces stays clear of the window boundary; the
    witness circuit is the ring of closed faces along the outer outline
    of that region.  Faces partially outside the window count as open
    (they are absent from the classification), so enclosure claims are
    conservative.
    """
    if origin_face is None:
        origin_face = classification.origin_face()
    if not classification.contains(origin_face):
        raise ValueError(f"origin face {origin_face} lies outside the classified region")

    region = {origin_face}
    stack = [origin_face]
    while stack:
        f = stack.pop()
        if classification.is_region_boundary(f):
            return None  # open region (or origin itself) touches the window edge
        q, r = f
        for dq, dr in AXIAL_DIRS:
            nb = (q + dq, r + dr)
            if nb in region or not classification.contains(nb):
                continue
            if not classification.is_closed(nb):
                region.add(nb)
                stack.append(nb)

    # Directed boundary edges with the region on the left; every outline
    # vertex has exactly one incoming and one outgoing edge because each
    # lattice vertex touches three faces.
    edge_from: dict[tuple[int, int], tuple[tuple[int, int], tuple[int, int]]] = {}
    for (q, r) in region:
        for k, (dq, dr) in enumerate(AXIAL_DIRS):
            nb = (q + dq, r + dr)
            if nb in region:
                continue
            u, v = _shared_edge(q, r, k)
            edge_from[u] = (v, nb)

    # split directed edges into cycles; the outer outline is the CCW one
    cycles = []
    unvisited = set(edge_from)
    while unvisited:
        start = unvisited.pop()
        verts = [start]
        ring = []
        u = start
        while True:
            v, outside = edge_from[u]
            ring.append(outside)
            if v == start:
                break
            unvisited.discard(v)
            verts.append(v)
            u = v
        area2 = 0.0
        for (ux, uy), (vx, vy) in zip(verts, verts[1:] + verts[:1]):
            area2 += ux * vy - vx * uy
        cycles.append((area2, ring))
    outer_ring = max(cycles, key=lambda c: c[0])[1]

    circuit = []
    for face in outer_ring:
        if not circuit or circuit[-1] != face:
            circuit.append(face)
    if len(circuit) > 1 and circuit[0] == circuit[-1]:
        circuit.pop()
    return circuit


def face_reports_csv(classification: FaceClassification) -> str:
    """CSV text: face_q, face_r, closed, and the six triangle-closed bits."""
    lines = ["face_q,face_r,closed,tri0,tri1,tri2,tri3,tri4,tri5"]
    for i, (q, r) in enumerate(classification.faces):
        tris = ",".join(str(int(t)) for t in classification.triangle_closed[i])
        lines.append(f"{int(q)},{int(r)},{int(classification.closed[i])},{tris}")
    return "\n".join(lines) + "\n"
