"""Square-lattice mapping for the super-critical certificate.

The window is tiled by side-s cells with s = g^{-1}(M*T)/sqrt(5), so any
two points in a pair of edge-adjacent cells are within g^{-1}(M*T) of
each other.  A lattice edge is open when both flanking cells are
occupied (indicator A) and every node in the two cells sees interference
below M from every in-pair transmitter (indicator B, with the
interference summed over every point in the window).  Open edges then
certify SIR edges between all their nodes: signal power at least M*T,
interference below M, hence SIR above T.

The dual lattice shifts everything by half a cell; a dual edge is open
exactly when the primal edge it crosses is open, and a closed dual
circuit around the origin is the finite-window witness that the origin's
open component cannot grow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .attenuation import AttenuationModel
from .geometry import PointProcessConfig, Window, sample

__all__ = [
    "SquareConfig",
    "EdgeClassification",
    "EdgeReport",
    "OpenComponent",
    "TrialRecord",
    "classify_edges",
    "open_component",
    "dual_closed_circuit",
    "percolation_trial",
    "edge_reports_csv",
    "trial_records_csv",
]


@dataclass(frozen=True)
class SquareConfig:
    """Interference cap M, threshold T, and a bounded attenuation model."""

    M: float
    threshold: float
    model: AttenuationModel
    exclude_receiver: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.M) and self.M > 0):
            raise ValueError(f"M must be finite and positive, got {self.M}")
        if not (math.isfinite(self.threshold) and self.threshold > 0):
            raise ValueError(f"threshold must be finite and positive, got {self.threshold}")
        if not self.model.bounded:
            raise ValueError(
                "the square-lattice construction requires a bounded attenuation model "
                "(finite g(0))"
            )
        s = self.side  # raises when M*T leaves the range of g
        if not (s > 0):
            raise ValueError(
                f"M*T = {self.M * self.threshold} equals g(0); the lattice side "
                "degenerates to zero (need M*T strictly below g(0))"
            )

    @property
    def side(self) -> float:
        return self.model.inverse(self.M * self.threshold) / math.sqrt(5.0)


@dataclass(frozen=True)
class EdgeReport:
    """One lattice edge: start vertex coordinates, orientation, indicators."""

    x: float
    y: float
    orientation: str  # "horizontal" | "vertical"
    A: bool
    B: bool

    @property
    def open(self) -> bool:
        return self.A and self.B


class EdgeClassification:
    """Array-backed A/B/open indicators over the lattice edges of a window.

    Cells are indexed (cx, cy) with cx in [0, nx), cy in [0, ny).  The
    horizontal edge from vertex (i, j) to (i+1, j) exists for
    j in [1, ny-1] and flanks cells (i, j-1) and (i, j); it is stored at
    [i, j-1].  The vertical edge from (i, j) to (i, j+1) exists for
    i in [1, nx-1], flanks cells (i-1, j) and (i, j), stored at [i-1, j].
    """

    def __init__(self, side: float, nx: int, ny: int,
                 A_h, B_h, A_v, B_v, n_points: int = 0):
        self.side = side
        self.nx = nx
        self.ny = ny
        self.A_h = np.asarray(A_h, dtype=bool)
        self.B_h = np.asarray(B_h, dtype=bool)
        self.A_v = np.asarray(A_v, dtype=bool)
        self.B_v = np.asarray(B_v, dtype=bool)
        if self.A_h.shape != (nx, ny - 1) or self.A_v.shape != (nx - 1, ny):
            raise ValueError("indicator array shapes do not match the lattice")
        self.open_h = self.A_h & self.B_h
        self.open_v = self.A_v & self.B_v
        self.n_points = n_points

    @classmethod
    def from_open_arrays(cls, open_h, open_v, side: float = 1.0) -> "EdgeClassification":
        """Build a synthetic classification from raw open-edge masks
        (A carries the mask, B is all-true)."""
        open_h = np.asarray(open_h, dtype=bool)
        open_v = np.asarray(open_v, dtype=bool)
        nx = open_h.shape[0]
        ny = open_v.shape[1]
        return cls(side, nx, ny,
                   open_h, np.ones_like(open_h),
                   open_v, np.ones_like(open_v))

    @property
    def n_edges(self) -> int:
        return self.open_h.size + self.open_v.size

    @property
    def n_open(self) -> int:
        return int(self.open_h.sum() + self.open_v.sum())

    @property
    def open_fraction(self) -> float:
        return self.n_open / self.n_edges if self.n_edges else 0.0

    def origin_vertex(self) -> tuple[int, int]:
        return (self.nx // 2, self.ny // 2)

    def horizontal_open(self, i: int, j: int) -> bool:
        """Edge (i, j)-(i+1, j); False when out of range."""
        if 0 <= i < self.nx and 1 <= j <= self.ny - 1:
            return bool(self.open_h[i, j - 1])
        return False

    def vertical_open(self, i: int, j: int) -> bool:
        """Edge (i, j)-(i, j+1); False when out of range."""
        if 1 <= i <= self.nx - 1 and 0 <= j < self.ny:
            return bool(self.open_v[i - 1, j])
        return False

    def edge_exists(self, v: tuple[int, int], w: tuple[int, int]) -> bool:
        (i1, j1), (i2, j2) = sorted([v, w])
        if (i2 - i1, j2 - j1) == (1, 0):
            return 0 <= i1 < self.nx and 1 <= j1 <= self.ny - 1
        if (i2 - i1, j2 - j1) == (0, 1):
            return 1 <= i1 <= self.nx - 1 and 0 <= j1 < self.ny
        return False

    def edge_open(self, v: tuple[int, int], w: tuple[int, int]) -> bool:
        (i1, j1), (i2, j2) = sorted([v, w])
        if (i2 - i1, j2 - j1) == (1, 0):
            return self.horizontal_open(i1, j1)
        if (i2 - i1, j2 - j1) == (0, 1):
            return self.vertical_open(i1, j1)
        return False

    def reports(self) -> list[EdgeReport]:
        out = []
        s = self.side
        for i in range(self.nx):
            for j in range(1, self.ny):
                out.append(EdgeReport(i * s, j * s, "horizontal",
                                      bool(self.A_h[i, j - 1]), bool(self.B_h[i, j - 1])))
        for i in range(1, self.nx):
            for j in range(self.ny):
                out.append(EdgeReport(i * s, j * s, "vertical",
                                      bool(self.A_v[i - 1, j]), bool(self.B_v[i - 1, j])))
        return out


def _lattice_shape(window: Window, s: float) -> tuple[int, int]:
    nx = int(math.floor(window.width / s + 1e-9))
    ny = int(math.floor(window.height / s + 1e-9))
    if nx < 2 or ny < 2:
        raise ValueError(
            f"window {window.width} x {window.height} holds fewer than 2x2 cells of side {s}"
        )
    if abs(nx * s - window.width) > 1e-9 * max(1.0, window.width) or \
       abs(ny * s - window.height) > 1e-9 * max(1.0, window.height):
        warnings.warn(
            f"window is not an integer number of cells; lattice truncated to {nx} x {ny}",
            stacklevel=2,
        )
    return nx, ny


def classify_edges(points, config: SquareConfig, window: Window) -> EdgeClassification:
    """Classify every lattice edge of the window against a realization.

    Occupancy uses only points inside the lattice region; interference
    sums run over every point in the window.
    """
    s = config.side
    nx, ny = _lattice_shape(window, s)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)

    cx = np.floor(pts[:, 0] / s).astype(np.int64) if n else np.zeros(0, dtype=np.int64)
    cy = np.floor(pts[:, 1] / s).astype(np.int64) if n else np.zeros(0, dtype=np.int64)
    in_lattice = (cx >= 0) & (cx < nx) & (cy >= 0) & (cy < ny)
    cell_id = np.where(in_lattice, cx * ny + cy, -1)

    order = np.argsort(cell_id, kind="stable")
    pts_sorted = pts[order]
    cell_sorted = cell_id[order]
    n_out = int(np.sum(cell_sorted < 0))
    counts = np.bincount(cell_sorted[n_out:], minlength=nx * ny) if n else np.zeros(
        nx * ny, dtype=np.int64)
    starts = np.zeros(nx * ny + 1, dtype=np.int64)
    starts[1:] = np.cumsum(counts)
    starts += n_out

    occ = counts.reshape(nx, ny) > 0
    A_h = occ[:, :-1] & occ[:, 1:]
    A_v = occ[:-1, :] & occ[1:, :]

    if n == 0:
        B_h = np.ones((nx, ny - 1), dtype=bool)
        B_v = np.ones((nx - 1, ny), dtype=bool)
        return EdgeClassification(s, nx, ny, A_h, B_h, A_v, B_v, 0)

    model = config.model
    totals = _kernels.total_power_bounded(pts_sorted, model.r0, model.alpha)
    g0 = float(model.eval(0.0))

    # horizontal edge [i, j-1] flanks cells (i, j-1) and (i, j)
    hi, hj = np.meshgrid(np.arange(nx), np.arange(1, ny), indexing="ij")
    h_a = (hi * ny + (hj - 1)).ravel()
    h_b = (hi * ny + hj).ravel()
    # vertical edge [i-1, j] flanks cells (i-1, j) and (i, j)
    vi, vj = np.meshgrid(np.arange(1, nx), np.arange(ny), indexing="ij")
    v_a = ((vi - 1) * ny + vj).ravel()
    v_b = (vi * ny + vj).ravel()

    cell_a = np.concatenate([h_a, v_a])
    cell_b = np.concatenate([h_b, v_b])
    ok = _kernels.cell_pair_interference_ok(
        pts_sorted,
        totals,
        starts[cell_a],
        starts[cell_a + 1],
        starts[cell_b],
        starts[cell_b + 1],
        model.r0,
        model.alpha,
        g0,
        not config.exclude_receiver,
        config.M,
    )
    n_h = h_a.size
    B_h = ok[:n_h].reshape(nx, ny - 1)
    B_v = ok[n_h:].reshape(nx - 1, ny)
    return EdgeClassification(s, nx, ny, A_h, B_h, A_v, B_v, n)


@dataclass(frozen=True)
class OpenComponent:
    """Open edges connected to the origin vertex, plus the boundary flag."""

    vertices: frozenset[tuple[int, int]]
    edges: frozenset[tuple[tuple[int, int], tuple[int, int]]]
    boundary_reached: bool


def _vertex_neighbors(v: tuple[int, int]):
    i, j = v
    yield (i + 1, j)
    yield (i - 1, j)
    yield (i, j + 1)
    yield (i, j - 1)


def open_component(
    classification: EdgeClassification, origin: tuple[int, int] | None = None
) -> OpenComponent:
    """Connected open edges through the origin vertex.

    boundary_reached marks a component vertex on the outermost lattice
    ring (i in {0, nx} or j in {0, ny}), the finite-window stand-in for
    an unbounded component.
    """
    if origin is None:
        origin = classification.origin_vertex()
    nx, ny = classification.nx, classification.ny
    vertices = {origin}
    edges = set()
    stack = [origin]
    while stack:
        v = stack.pop()
        for w in _vertex_neighbors(v):
            if classification.edge_open(v, w):
                edge = tuple(sorted([v, w]))
                edges.add(edge)
                if w not in vertices:
                    vertices.add(w)
                    stack.append(w)
    boundary = any(i in (0, nx) or j in (0, ny) for i, j in vertices)
    return OpenComponent(frozenset(vertices), frozenset(edges), boundary)


def largest_open_component_size(classification: EdgeClassification) -> int:
    """Edge count of the largest connected set of open edges."""
    parent: dict[tuple[int, int], tuple[int, int]] = {}

    def find(x):
        root = x
        while parent.get(root, root) != root:
            root = parent[root]
        while parent.get(x, x) != x:
            parent[x], x = root, parent[x]
        return root

    edge_count: dict[tuple[int, int], int] = {}
    all_edges = []
    hi, hj = np.nonzero(classification.open_h)
    for i, j in zip(hi, hj):
        all_edges.append(((int(i), int(j) + 1), (int(i) + 1, int(j) + 1)))
    vi, vj = np.nonzero(classification.open_v)
    for i, j in zip(vi, vj):
        all_edges.append(((int(i) + 1, int(j)), (int(i) + 1, int(j) + 1)))
    for v, w in all_edges:
        rv, rw = find(v), find(w)
        if rv != rw:
            parent[rw] = rv
    for v, w in all_edges:
        r = find(v)
        edge_count[r] = edge_count.get(r, 0) + 1
    return max(edge_count.values(), default=0)


def dual_closed_circuit(
    classification: EdgeClassification, origin: tuple[int, int] | None = None
) -> list[tuple[float, float]] | None:
    """A closed dual circuit surrounding the origin vertex, or None.

    Each primal vertex of the origin's open component owns the half-cell
    square whose corners are the four surrounding cell centers (the dual
    lattice).  The outer outline of the union of those squares is a
    closed walk of dual edges, each crossing a primal edge out of the
    component; such edges are necessarily closed (an open one would have
    pulled its endpoint into the component).  When the component touches
    the lattice boundary some outline edge leaves the window and no
    in-window circuit exists.  Returns the cyclic dual vertex sequence
    in window coordinates.
    """
    if origin is None:
        origin = classification.origin_vertex()
    comp = open_component(classification, origin)
    nx, ny = classification.nx, classification.ny
    verts = set(comp.vertices)

    # square of vertex (i, j) has dual corners (cells) (i-1..i, j-1..j)
    for (i, j) in verts:
        if not (1 <= i <= nx - 1 and 1 <= j <= ny - 1):
            return None  # square juts out of the dual region

    # directed boundary sides with the union region on the left
    sides: dict[tuple[int, int], list[tuple[tuple[int, int], tuple[int, int]]]] = {}
    for (i, j) in verts:
        neighbors_and_sides = (
            ((i + 1, j), (i, j - 1), (i, j)),      # east side, up
            ((i, j + 1), (i, j), (i - 1, j)),      # north side, left
            ((i - 1, j), (i - 1, j), (i - 1, j - 1)),  # west side, down
            ((i, j - 1), (i - 1, j - 1), (i, j - 1)),  # south side, right
        )
        for w, d_from, d_to in neighbors_and_sides:
            if w in verts:
                continue
            sides.setdefault(d_from, []).append((d_to, w))

    if not sides:
        return None

    def next_edge(u, v):
        """Directed edge following u -> v; sharpest left turn at pinches."""
        outs = sides[v]
        if len(outs) == 1:
            return v, outs[0]
        din = (v[0] - u[0], v[1] - u[1])

        def turn(cand):
            dout = (cand[0][0] - v[0], cand[0][1] - v[1])
            cross = din[0] * dout[1] - din[1] * dout[0]
            dot = din[0] * dout[0] + din[1] * dout[1]
            return math.atan2(cross, dot)

        return v, max(outs, key=turn)

    def walk_from(start):
        """Follow directed sides until the starting directed edge repeats."""
        path = [start[0]]
        used = []
        cur = start
        while True:
            used.append(cur)
            u, (v, _w) = cur
            path.append(v)
            cur = next_edge(u, v)
            if cur == start:
                break
        return path, used

    remaining = {(u, e) for u, lst in sides.items() for e in lst}
    best = None
    while remaining:
        start = next(iter(remaining))
        path, used = walk_from(start)
        remaining.difference_update(used)
        area2 = 0.0
        for (ux, uy), (vx, vy) in zip(path, path[1:]):
            area2 += ux * vy - vx * uy
        if area2 > 0 and (best is None or area2 > best[0]):
            best = (area2, path)
    if best is None:
        return None
    s = classification.side
    return [((a + 0.5) * s, (b + 0.5) * s) for a, b in best[1]]


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    lam: float
    s: float
    M: float
    T: float
    n_points: int
    open_fraction: float
    largest_component: int
    boundary_reached: bool


def percolation_trial(
    lam: float, config: SquareConfig, window: Window, seed: int
) -> TrialRecord:
    """Sample a Poisson realization, classify edges, test boundary reach."""
    pts = sample(PointProcessConfig(kind="poisson", intensity=lam, seed=seed), window)
    cls = classify_edges(pts, config, window)
    comp = open_component(cls)
    return TrialRecord(
        seed=seed,
        lam=lam,
        s=cls.side,
        M=config.M,
        T=config.threshold,
        n_points=len(pts),
        open_fraction=cls.open_fraction,
        largest_component=largest_open_component_size(cls),
        boundary_reached=comp.boundary_reached,
    )


def edge_reports_csv(classification: EdgeClassification) -> str:
    """CSV text: x, y, orientation, A, B, open."""
    lines = ["x,y,orientation,A,B,open"]
    for r in classification.reports():
        lines.append(
            f"{r.x!r},{r.y!r},{r.orientation},{int(r.A)},{int(r.B)},{int(r.open)}"
        )
    return "\n".join(lines) + "\n"


def trial_records_csv(records) -> str:
    """CSV text: seed, lambda, s, M, T, open_fraction, largest_component, boundary_reached."""
    lines = ["seed,lambda,s,M,T,open_fraction,largest_component,boundary_reached"]
    for t in records:
        lines.append(
            f"{t.seed},{t.lam!r},{t.s!r},{t.M!r},{t.T!r},"
            f"{t.open_fraction!r},{t.largest_component},{int(t.boundary_reached)}"
        )
    return "\n".join(lines) + "\n"
