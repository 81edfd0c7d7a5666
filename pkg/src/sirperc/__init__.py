"""Percolation and connectivity on signal-to-interference-ratio graphs.

Subpackages by construction: ``geometry`` (point processes and windows),
``attenuation`` (path-loss families), ``sir_graph`` (the directed SIR
graph), ``hexlattice`` (hexagonal sub-critical certificate),
``squarelattice`` (square-lattice super-critical certificate),
``bounds`` (Peierls and Chernoff closed forms), ``coloring``
(channel coloring and connectivity on the unit square), ``sweep`` and
``cli`` (Monte Carlo orchestration).
"""

from .attenuation import BoundedPowerLaw, PowerLaw, make_model
from .bounds import (
    BoundsConfig,
    BoundsReport,
    Q_STAR,
    chernoff_cell_bounds,
    evaluate,
    find_supercritical_interval,
    peierls_series,
)
from .coloring import (
    ColoringAssignment,
    ColoringConfig,
    assign_colors,
    build_colored_sir_graph,
    connectivity_trial,
    interference_ring_bound,
)
from .geometry import (
    PointProcessConfig,
    UNIT_SQUARE,
    Window,
    derive_trial_seed,
    distance,
    pairwise_distances,
    poisson_process,
    sample,
    uniform_process,
)
from .hexlattice import (
    FaceClassification,
    HexConfig,
    classify_faces,
    closed_face_probability,
    find_closed_circuit,
    lambda_interval_subcritical,
    max_closed_face_probability,
    mu_of,
    validate_config,
)
from .sir_graph import (
    ComponentReport,
    SirGraph,
    SirGraphConfig,
    build,
    components,
    export_edge_list,
    is_strongly_connected,
    origin_component_reach,
    sir,
)
from .squarelattice import (
    EdgeClassification,
    SquareConfig,
    classify_edges,
    dual_closed_circuit,
    open_component,
    percolation_trial,
)
from .sweep import SweepSpec, emit, run_sweep

__version__ = "0.1.0"
