"""Cell tiling and round-robin coloring of the unit square, colored SIR
graphs, and the connectivity experiment regimes.

Nodes get colors (orthogonal channels) so that only same-color
transmissions interfere.  The upper-bound regime tiles the square with
side sqrt(c log n / n) cells, assigns one of four disjoint color sets
per cell by column parity and row alternation, and hands colors out
round-robin inside each cell; about 4(1+delta)c log n colors then keep
every cell repeat-free with high probability and the graph strongly
connected.  The lower-bound regime uses side sqrt(log n / n) cells and
ceil(T f(n)/omega) colors with f sub-logarithmic, which packs many
same-color nodes into every cell and disconnects the graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import zeta

from . import _kernels
from .attenuation import AttenuationModel
from .geometry import PointProcessConfig, UNIT_SQUARE, sample
from .sir_graph import SirGraph, SirGraphConfig, is_strongly_connected

__all__ = [
    "ColoringConfig",
    "upper_bound_config",
    "lower_bound_config",
    "ColoringAssignment",
    "ColoredSirGraph",
    "assign_colors",
    "build_colored_sir_graph",
    "connectivity_trial",
    "ConnectivityRecord",
    "interference_ring_bound",
    "RingBound",
    "LOWER_BOUND_F",
    "connectivity_records_csv",
    "assignment_csv",
]

LOWER_BOUND_F = {
    "sqrt_log": lambda n: math.sqrt(math.log(n)),
    "log_log": lambda n: math.log(math.log(n)),
    "constant": lambda n: 1.0,
}


@dataclass(frozen=True)
class ColoringConfig:
    """Coloring regime for n nodes on the unit square.

    mode "upper_bound": cell side sqrt(c log n / n), four color sets of
    size ceil((1+delta) c log n) each.  mode "lower_bound": cell side
    sqrt(log n / n), a single pool of ceil(T f(n) / omega) colors.
    """

    n: int
    mode: str = "upper_bound"
    c: float = 4.0
    delta: float = 0.5
    f_name: str = "constant"
    omega: float = 1.0
    threshold: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need n >= 2 nodes, got {self.n}")
        if self.mode not in ("upper_bound", "lower_bound"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "upper_bound":
            if self.c <= 0 or self.delta <= 0:
                raise ValueError("upper_bound mode needs c > 0 and delta > 0")
            if self.cell_side > 1.0:
                raise ValueError(
                    f"cell side {self.cell_side:.4f} exceeds the unit square; "
                    "c log n / n must be <= 1"
                )
        else:
            if self.f_name not in LOWER_BOUND_F:
                raise ValueError(f"unknown f {self.f_name!r}; choose from {sorted(LOWER_BOUND_F)}")
            if self.omega <= 0 or self.threshold <= 0:
                raise ValueError("lower_bound mode needs omega > 0 and threshold > 0")

    @property
    def cell_side(self) -> float:
        log_n = math.log(self.n)
        if self.mode == "upper_bound":
            return math.sqrt(self.c * log_n / self.n)
        return math.sqrt(log_n / self.n)

    @property
    def set_size(self) -> int:
        """Colors per cell set (upper_bound mode)."""
        return math.ceil((1.0 + self.delta) * self.c * math.log(self.n))

    @property
    def n_colors(self) -> int:
        if self.mode == "upper_bound":
            return 4 * self.set_size
        f = LOWER_BOUND_F[self.f_name](self.n)
        return max(1, math.ceil(self.threshold * f / self.omega))

    @property
    def cells_per_axis(self) -> int:
        return math.ceil(1.0 / self.cell_side)


def upper_bound_config(n: int, c: float = 4.0, delta: float = 0.5) -> ColoringConfig:
    return ColoringConfig(n=n, mode="upper_bound", c=c, delta=delta)


def lower_bound_config(n: int, f_name: str, omega: float, threshold: float) -> ColoringConfig:
    return ColoringConfig(n=n, mode="lower_bound", f_name=f_name, omega=omega,
                          threshold=threshold)


@dataclass
class ColoringAssignment:
    """Cells, color-set pattern, and per-node colors for one realization.

    cell_of[k] is the (column, row) cell of node k; color_of[k] its
    color id.  In upper_bound mode colors [4s, 4s + set_size) belong to
    set s; set_of_cell follows column parity then row alternation, so
    any 2x2 block of cells shows all four sets.  Within a cell, nodes in
    ascending index order take consecutive colors of the cell's pool.
    truncated_cell[k] flags nodes in the partial cells at the square's
    far edges (excluded from occupancy statistics).
    """

    config: ColoringConfig
    cell_of: np.ndarray
    color_of: np.ndarray
    truncated_cell: np.ndarray

    @property
    def n_colors(self) -> int:
        return self.config.n_colors

    def set_of_cell(self, cell: tuple[int, int]) -> int:
        if self.config.mode != "upper_bound":
            raise ValueError("color sets exist only in upper_bound mode")
        return _cell_set(cell[0], cell[1])

    def cell_counts(self) -> dict[tuple[int, int], int]:
        out: dict[tuple[int, int], int] = {}
        for i, j in self.cell_of:
            out[(int(i), int(j))] = out.get((int(i), int(j)), 0) + 1
        return out

    def max_cell_occupancy(self, full_cells_only: bool = True) -> int:
        counts = np.zeros(self.config.cells_per_axis ** 2, dtype=np.int64)
        m = self.config.cells_per_axis
        flat = self.cell_of[:, 0] * m + self.cell_of[:, 1]
        if full_cells_only:
            flat = flat[~self.truncated_cell]
        if len(flat) == 0:
            return 0
        np.add.at(counts, flat, 1)
        return int(counts.max())

    def has_repeated_color_in_cell(self) -> bool:
        """True when some cell holds two nodes of the same color."""
        m = self.config.cells_per_axis
        key = (self.cell_of[:, 0] * m + self.cell_of[:, 1]) * self.n_colors + self.color_of
        return len(np.unique(key)) < len(key)


def _cell_set(col: int, row: int):
    """Four-set pattern: sets {0, 1} alternate by row in even columns,
    {2, 3} in odd columns, so adjacent cells never share a set."""
    return 2 * (col % 2) + (row % 2)


def assign_colors(points, config: ColoringConfig) -> ColoringAssignment:
    """Deterministic cell binning and round-robin coloring of a point set.

    Nodes are handed colors in ascending original index order within
    each cell: node p of a cell gets the p-th color (mod pool size) of
    the cell's pool.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n != config.n:
        raise ValueError(f"point count {n} does not match config.n = {config.n}")
    if np.any(pts < 0) or np.any(pts > 1):
        raise ValueError("points must lie in the unit square")
    side = config.cell_side
    m = config.cells_per_axis
    cols = np.minimum(np.floor(pts[:, 0] / side).astype(np.int64), m - 1)
    rows = np.minimum(np.floor(pts[:, 1] / side).astype(np.int64), m - 1)
    cell_of = np.column_stack([cols, rows])
    # cells clipped by the far window edges hold less than a full cell of area
    full = m * side <= 1.0 + 1e-12
    truncated = np.zeros(n, dtype=bool)
    if not full:
        truncated = (cols == m - 1) | (rows == m - 1)

    # rank of each node within its cell, by ascending node index
    flat = cols * m + rows
    order = np.argsort(flat, kind="stable")
    ranks = np.empty(n, dtype=np.int64)
    sorted_flat = flat[order]
    boundaries = np.flatnonzero(np.diff(sorted_flat)) + 1
    starts = np.concatenate([[0], boundaries])
    seq = np.arange(n, dtype=np.int64)
    group_start = np.repeat(starts, np.diff(np.concatenate([starts, [n]])))
    ranks[order] = seq - group_start

    if config.mode == "upper_bound":
        set_ids = _cell_set(cols, rows)
        color_of = set_ids * config.set_size + ranks % config.set_size
    else:
        color_of = ranks % config.n_colors
    return ColoringAssignment(config, cell_of, color_of.astype(np.int64), truncated)


@dataclass
class ColoredSirGraph(SirGraph):
    """SIR graph under a coloring; interference is per transmitter class.

    class_power[j, c] is the power at j from class-c nodes other than j;
    total_power_at keeps the all-color sum for compatibility.
    """

    colors: np.ndarray = None
    class_power: np.ndarray = None

    def sir_value(self, i: int, j: int) -> float:
        ci = int(self.colors[i])
        d = float(np.hypot(*(self.points[i] - self.points[j])))
        gij = float(self.model.eval(d))
        interference = float(self.class_power[j, ci]) - gij
        if not self.config.exclude_receiver and int(self.colors[j]) == ci:
            interference += self.g0
        if interference <= 0.0:
            return math.inf
        return gij / interference


def build_colored_sir_graph(
    points,
    assignment: ColoringAssignment,
    model: AttenuationModel,
    config: SirGraphConfig,
) -> ColoredSirGraph:
    """Directed SIR graph where only same-color-as-transmitter nodes interfere.

    With a single color this reduces exactly to the plain construction.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2).copy()
    n = len(pts)
    colors = np.asarray(assignment.color_of, dtype=np.int64)
    if len(colors) != n:
        raise ValueError("assignment does not match the point set")
    bounded = model.bounded
    r0 = model.r0 if bounded else 0.0
    g0 = float(model.eval(0.0)) if bounded else math.inf
    if not bounded:
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d2, 1.0)
        if np.any(d2 == 0.0):
            raise ValueError("coincident points are not allowed under the singular power law")
    class_power = _kernels.color_class_power(
        pts, colors, int(colors.max()) + 1, r0, model.alpha, bounded
    )
    if config.threshold == 0.0:
        adj = ~np.eye(n, dtype=bool)
    else:
        adj = _kernels.colored_adjacency(
            pts, colors, class_power, config.threshold, r0, model.alpha, bounded,
            g0, not config.exclude_receiver,
        )
    out_adjacency = [np.flatnonzero(adj[i]).astype(np.int64) for i in range(n)]
    total = class_power.sum(axis=1)
    return ColoredSirGraph(pts, out_adjacency, total, config, model, g0,
                           colors=colors, class_power=class_power)


@dataclass(frozen=True)
class ConnectivityRecord:
    """One connectivity trial: outcome plus occupancy diagnostics."""

    seed: int
    n: int
    mode: str
    n_colors: int
    c: float
    m: float
    delta: float
    threshold: float
    connected: bool
    isolated_nodes: int
    max_cell_occupancy: int
    min_neighborhood_occupancy: int
    repeat_free: bool


def _min_neighborhood_occupancy(pts: np.ndarray, m: float) -> int:
    """Smallest point count over the side sqrt(m log n / n) squares
    centered at each node (the node itself included)."""
    n = len(pts)
    half = math.sqrt(m * math.log(n) / n) / 2.0
    tree = cKDTree(pts)
    counts = tree.query_ball_point(pts, r=half, p=np.inf, return_length=True)
    return int(np.min(counts))


def connectivity_trial(
    config: ColoringConfig,
    model: AttenuationModel,
    threshold: float,
    seed: int,
    neighborhood_m: float = 1.0,
) -> ConnectivityRecord:
    """Sample n uniform nodes, color them, test strong connectivity."""
    pts = sample(PointProcessConfig(kind="uniform_n", n=config.n, seed=seed), UNIT_SQUARE)
    assignment = assign_colors(pts, config)
    graph = build_colored_sir_graph(pts, assignment, model, SirGraphConfig(threshold))
    connected = is_strongly_connected(graph)
    out_deg = np.array([len(a) for a in graph.out_adjacency])
    in_deg = np.zeros(config.n, dtype=np.int64)
    for adj in graph.out_adjacency:
        in_deg[adj] += 1
    isolated = int(np.sum((out_deg == 0) | (in_deg == 0)))
    return ConnectivityRecord(
        seed=seed,
        n=config.n,
        mode=config.mode,
        n_colors=config.n_colors,
        c=config.c if config.mode == "upper_bound" else 1.0,
        m=neighborhood_m,
        delta=config.delta if config.mode == "upper_bound" else 0.0,
        threshold=threshold,
        connected=connected,
        isolated_nodes=isolated,
        max_cell_occupancy=assignment.max_cell_occupancy(),
        min_neighborhood_occupancy=_min_neighborhood_occupancy(pts, neighborhood_m),
        repeat_free=not assignment.has_repeated_color_in_cell(),
    )


@dataclass(frozen=True)
class RingBound:
    """Worst-case same-color interference seen from inside a neighborhood.

    interference_bound: 8 zeta(alpha) / ((2 beta)**alpha (c log n / n)**(alpha/2))
    with beta = 1 - sqrt(m/c), counting at most eight same-color nodes
    per ring of same-set cells.  sir_lower_bound divides the worst-case
    in-neighborhood signal (2 m log n / n)**(-alpha/2) by it; note this
    stated form carries beta**(alpha/2) where a direct division of the
    two displayed quantities gives beta**alpha (the two agree only at
    beta = 1), so calibration should trust measurements over either
    constant.
    """

    interference_bound: float
    sir_lower_bound: float
    beta: float
    zeta_alpha: float


def interference_ring_bound(c: float, m: float, alpha: float, n: int) -> RingBound:
    """Analytic same-color interference cap for the upper-bound tiling."""
    if not (0 < m < c):
        raise ValueError(f"need 0 < m < c, got m = {m}, c = {c}")
    if alpha <= 1:
        raise ValueError(f"the ring sum needs alpha > 1, got {alpha}")
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    beta = 1.0 - math.sqrt(m / c)
    z = float(zeta(alpha))
    cell_area = c * math.log(n) / n
    interference = 8.0 * z / ((2.0 * beta) ** alpha * cell_area ** (alpha / 2.0))
    sir_lb = c ** (alpha / 2.0) * (m / (2.0 * beta)) ** (-alpha / 2.0) / (8.0 * z)
    return RingBound(interference_bound=interference, sir_lower_bound=sir_lb,
                     beta=beta, zeta_alpha=z)


def connectivity_records_csv(records) -> str:
    """CSV text: seed, n, mode, C_n, c, m, delta, T, connected,
    isolated_nodes, max_cell_occupancy."""
    lines = ["seed,n,mode,C_n,c,m,delta,T,connected,isolated_nodes,max_cell_occupancy"]
    for r in records:
        lines.append(
            f"{r.seed},{r.n},{r.mode},{r.n_colors},{r.c!r},{r.m!r},{r.delta!r},"
            f"{r.threshold!r},{int(r.connected)},{r.isolated_nodes},{r.max_cell_occupancy}"
        )
    return "\n".join(lines) + "\n"


def assignment_csv(points, assignment: ColoringAssignment) -> str:
    """CSV text: node_index, x, y, cell_i, cell_j, color."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    lines = ["node_index,x,y,cell_i,cell_j,color"]
    for k in range(len(pts)):
        i, j = assignment.cell_of[k]
        lines.append(
            f"{k},{float(pts[k, 0])!r},{float(pts[k, 1])!r},"
            f"{int(i)},{int(j)},{int(assignment.color_of[k])}"
        )
    return "\n".join(lines) + "\n"
