"""Seeded parallel Monte Carlo sweeps over parameter grids.

A sweep names an experiment, a grid of parameter axes, and a trial
budget.  Every (grid point, trial) pair gets its own seed derived from
the base seed, so results are identical for any worker count and
schedule; rows come out sorted by the grid axes.  Invalid grid points
are recorded as skipped instead of aborting the sweep.
"""

from __future__ import annotations

import io
import itertools
import json
import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .attenuation import make_model
from .bounds import BoundsConfig, evaluate, peierls_series
from .coloring import ColoringConfig, connectivity_trial
from .geometry import PointProcessConfig, Window, derive_trial_seed, sample
from .hexlattice import HexConfig, classify_faces, find_closed_circuit
from .sir_graph import SirGraphConfig, build, is_strongly_connected
from .squarelattice import SquareConfig, percolation_trial

__all__ = ["SweepSpec", "SweepRow", "SweepResult", "run_sweep", "emit"]

EXPERIMENTS = ("sir_graph", "hex", "square", "bounds", "color")


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: experiment name, grid axes, per-point trials, seeding.

    axes maps axis names to explicit value lists; fixed holds scalar
    parameters shared by every grid point.
    """

    experiment: str
    axes: dict[str, list[float]]
    fixed: dict[str, float | str] = field(default_factory=dict)
    trials: int = 1
    base_seed: int = 0
    workers: int | str = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if not self.axes or any(len(v) == 0 for v in self.axes.values()):
            raise ValueError("sweep grid must have at least one axis with values")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")

    def grid_points(self) -> list[dict[str, float]]:
        """Grid points in lexicographic order of the sorted axes."""
        names = sorted(self.axes)
        combos = itertools.product(*(sorted(self.axes[k]) for k in names))
        return [dict(zip(names, c)) for c in combos]

    def n_workers(self) -> int:
        if self.workers == "auto":
            return os.cpu_count() or 1
        return max(1, int(self.workers))


@dataclass(frozen=True)
class SweepRow:
    point: dict[str, float]
    trials: int
    estimate: float
    std_error: float
    extra: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow]
    skipped: list[tuple[dict[str, float], str]]


def _model_from(params: dict):
    kind = str(params.get("attenuation.kind", "power_law"))
    alpha = float(params.get("attenuation.alpha", 4.0))
    r0 = float(params.get("attenuation.r0", 1.0))
    return make_model(kind, alpha, r0)


def _bernoulli_stderr(p_hat: float, trials: int) -> float:
    return math.sqrt(p_hat * (1.0 - p_hat) / trials)


def _one_trial(experiment: str, params: dict, seed: int) -> float:
    """A single Bernoulli trial of the given experiment; returns 0/1."""
    if experiment == "sir_graph":
        n = int(params.get("n", 50))
        model = _model_from(params)
        cfg = SirGraphConfig(float(params.get("T", 1.0)),
                             bool(params.get("exclude_receiver", True)))
        pts = sample(PointProcessConfig(kind="uniform_n", n=n, seed=seed),
                     Window(float(params.get("window", 1.0)), float(params.get("window", 1.0))))
        return 1.0 if is_strongly_connected(build(pts, model, cfg)) else 0.0
    if experiment == "hex":
        cfg = HexConfig(
            delta=float(params.get("delta", 1.0)),
            rho=float(params.get("rho", 0.9)),
            eta=float(params.get("eta", 1.0)),
            threshold=float(params.get("T", 1.0)),
            alpha=float(params.get("alpha", 4.0)),
        )
        w = float(params.get("window", 20.0))
        window = Window(w, w)
        pts = sample(PointProcessConfig(intensity=float(params["lam"]), seed=seed), window)
        cls = classify_faces(pts, cfg, window)
        return 1.0 if find_closed_circuit(cls) is not None else 0.0
    if experiment == "square":
        model = _model_from(params)
        cfg = SquareConfig(
            M=float(params["M"]),
            threshold=float(params.get("T", 1.0)),
            model=model,
            exclude_receiver=bool(params.get("exclude_receiver", True)),
        )
        cells = int(params.get("cells", 16))
        w = cells * cfg.side
        rec = percolation_trial(float(params["lam"]), cfg, Window(w, w), seed)
        return 1.0 if rec.boundary_reached else 0.0
    if experiment == "color":
        mode = str(params.get("mode", "upper_bound"))
        if mode == "upper_bound":
            cfg = ColoringConfig(n=int(params.get("n", 500)), mode=mode,
                                 c=float(params.get("c", 4.0)),
                                 delta=float(params.get("delta", 0.5)))
        else:
            cfg = ColoringConfig(n=int(params.get("n", 500)), mode=mode,
                                 f_name=str(params.get("f", "constant")),
                                 omega=float(params.get("omega", 1.0)),
                                 threshold=float(params.get("T", 1.0)))
        model = _model_from(params)
        rec = connectivity_trial(cfg, model, float(params.get("T", 1.0)), seed)
        return 1.0 if rec.connected else 0.0
    raise ValueError(f"experiment {experiment!r} has no trial function")


def _bounds_row(params: dict) -> SweepRow:
    if "q" in params:
        q = float(params["q"])
        series = peierls_series(q)
        return SweepRow(point=params, trials=1, estimate=series, std_error=0.0,
                        extra={"q": q, "series_value": series})
    model = _model_from(params)
    cfg = BoundsConfig(
        lam=float(params["lam"]),
        M=float(params["M"]),
        T=float(params.get("T", 1.0)),
        model=model,
        K=float(params.get("K", 1.0)),
        area_convention=str(params.get("area_convention", "area")),
    )
    rep = evaluate(cfg)
    extra = {
        "lambda": cfg.lam, "M": cfg.M, "T": cfg.T, "K": cfg.K,
        "p_A": rep.p_A, "p1": rep.p1, "p2": rep.p2, "q": rep.q,
        "series_value": rep.series_value,
        "subcritical_series": float(rep.subcritical_series),
    }
    return SweepRow(point=params, trials=1, estimate=rep.q, std_error=0.0, extra=extra)


def _run_point(args) -> tuple[int, SweepRow | None, str | None]:
    experiment, params, fixed, trials, base_seed, point_index = args
    merged = {**fixed, **params}
    try:
        if experiment == "bounds":
            return point_index, _bounds_row(merged), None
        hits = 0.0
        for k in range(trials):
            seed = derive_trial_seed(base_seed, point_index * trials + k)
            hits += _one_trial(experiment, merged, seed)
        p_hat = hits / trials
        return point_index, SweepRow(
            point=params, trials=trials, estimate=p_hat,
            std_error=_bernoulli_stderr(p_hat, trials),
        ), None
    except Exception as exc:  # skipped point, never fatal
        return point_index, None, f"{type(exc).__name__}: {exc}"


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Execute a sweep; deterministic for any worker count."""
    points = spec.grid_points()
    tasks = [
        (spec.experiment, pt, spec.fixed, spec.trials, spec.base_seed, i)
        for i, pt in enumerate(points)
    ]
    n_workers = spec.n_workers()
    results: list[tuple[int, SweepRow | None, str | None]] = []
    if n_workers <= 1 or len(tasks) <= 1:
        results = [_run_point(t) for t in tasks]
    else:
        # spawn: fork is unsafe once the JIT threading layer is live
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=n_workers, mp_context=ctx) as pool:
            results = list(pool.map(_run_point, tasks))
    results.sort(key=lambda r: r[0])
    rows = []
    skipped = []
    for idx, row, err in results:
        if row is not None:
            rows.append(row)
        else:
            skipped.append((points[idx], err))
    return SweepResult(spec=spec, rows=rows, skipped=skipped)


def emit(result: SweepResult, fmt: str = "csv") -> bytes:
    """Serialize a sweep result; emission is stable byte-for-byte."""
    if fmt == "csv":
        buf = io.StringIO()
        axis_names = sorted(result.spec.axes)
        extra_names = sorted(
            {k for r in result.rows for k in r.extra} - set(axis_names)
        )
        header = axis_names + ["trials", "estimate", "std_error"] + extra_names
        buf.write(",".join(header) + "\n")
        for r in result.rows:
            cells = [repr(float(r.point[a])) for a in axis_names]
            cells += [str(r.trials), repr(float(r.estimate)), repr(float(r.std_error))]
            cells += [repr(float(r.extra[k])) if k in r.extra else "" for k in extra_names]
            buf.write(",".join(cells) + "\n")
        for pt, reason in result.skipped:
            buf.write(f"# skipped: {json.dumps(pt, sort_keys=True)} reason: {reason}\n")
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        payload = {
            "spec": {
                "experiment": result.spec.experiment,
                "axes": {k: list(v) for k, v in sorted(result.spec.axes.items())},
                "fixed": dict(sorted(result.spec.fixed.items())),
                "trials": result.spec.trials,
                "base_seed": result.spec.base_seed,
            },
            "rows": [
                {
                    "point": dict(sorted(r.point.items())),
                    "trials": r.trials,
                    "estimate": r.estimate,
                    "std_error": r.std_error,
                    **({"extra": dict(sorted(r.extra.items()))} if r.extra else {}),
                }
                for r in result.rows
            ],
            "skipped": [
                {"point": dict(sorted(pt.items())), "reason": reason}
                for pt, reason in result.skipped
            ],
        }
        return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")


def parse_csv(data: bytes) -> list[dict[str, float]]:
    """Re-parse emitted CSV rows (skipping the trailing skip report)."""
    text = data.decode("utf-8")
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    out = []
    for ln in lines[1:]:
        cells = ln.split(",")
        row = {}
        for k, v in zip(header, cells):
            if v != "":
                row[k] = float(v)
        out.append(row)
    return out
