"""Command-line front end.

Subcommands: sample, build-graph, hex, square, bounds, color, sweep.
Configuration comes from an optional flat key=value file with dotted
keys (--config); command-line flags override file values.  Data goes to
stdout or --out; progress and warnings go to stderr.  Exit codes:
0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .attenuation import make_model
from .bounds import BoundsConfig, evaluate
from .coloring import (
    ColoringConfig,
    assign_colors,
    assignment_csv,
    connectivity_records_csv,
    connectivity_trial,
)
from .geometry import PointProcessConfig, Window, derive_trial_seed, sample
from .hexlattice import HexConfig, classify_faces, face_reports_csv, find_closed_circuit
from .sir_graph import SirGraphConfig, build, export_edge_list
from .squarelattice import (
    SquareConfig,
    classify_edges,
    edge_reports_csv,
    percolation_trial,
    trial_records_csv,
)
from .sweep import SweepSpec, emit, run_sweep

CONFIG_ERROR = 2
IO_ERROR = 3


class ConfigError(Exception):
    pass


def _parse_config_file(path: str) -> dict[str, str]:
    """Flat key = value lines; '#' starts a comment; keys are dotted."""
    out: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
                key, val = line.split("=", 1)
                out[key.strip()] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return out


def _get(cfg: dict, args: argparse.Namespace, key: str, cast, default=None, flag=None):
    """Flag value if set, else config-file value, else default."""
    if flag is not None:
        v = getattr(args, flag, None)
        if v is not None:
            return v
    if key in cfg:
        try:
            return cast(cfg[key])
        except ValueError as exc:
            raise ConfigError(f"config key {key}: {exc}") from exc
    return default


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _write_out(args: argparse.Namespace, data: str | bytes) -> None:
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        if args.out:
            with open(args.out, "wb") as fh:
                fh.write(data)
        else:
            sys.stdout.buffer.write(data)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        raise SystemExit(IO_ERROR)


def _model_from_cfg(cfg: dict, args) -> object:
    kind = _get(cfg, args, "attenuation.kind", str, "power_law", "attenuation_kind")
    alpha = _get(cfg, args, "attenuation.alpha", float, 4.0, "alpha")
    r0 = _get(cfg, args, "attenuation.r0", float, 1.0, "r0")
    return make_model(kind, alpha, r0)


def _window_from_cfg(cfg: dict, args) -> Window:
    w = _get(cfg, args, "window.width", float, 1.0, "width")
    h = _get(cfg, args, "window.height", float, 1.0, "height")
    mode = _get(cfg, args, "window.boundary", str, "plain", None)
    return Window(w, h, mode)


def _points_from_cfg(cfg: dict, args, seed: int) -> np.ndarray:
    window = _window_from_cfg(cfg, args)
    n = _get(cfg, args, "process.n", int, None, "n")
    lam = _get(cfg, args, "process.intensity", float, None, "intensity")
    if n is not None:
        pc = PointProcessConfig(kind="uniform_n", n=n, seed=seed)
    elif lam is not None:
        pc = PointProcessConfig(kind="poisson", intensity=lam, seed=seed)
    else:
        raise ConfigError("need --n or --intensity (process.n / process.intensity)")
    return sample(pc, window)


def _cmd_sample(cfg, args) -> None:
    pts = _points_from_cfg(cfg, args, args.seed)
    lines = ["x,y"] + [f"{float(x)!r},{float(y)!r}" for x, y in pts]
    _write_out(args, "\n".join(lines) + "\n")


def _cmd_build_graph(cfg, args) -> None:
    pts = _points_from_cfg(cfg, args, args.seed)
    model = _model_from_cfg(cfg, args)
    gcfg = SirGraphConfig(
        threshold=_get(cfg, args, "sir.threshold", float, 1.0, "threshold"),
        exclude_receiver=_get(cfg, args, "sir.exclude_receiver", _bool, True, None),
    )
    graph = build(pts, model, gcfg)
    _write_out(args, export_edge_list(graph))


def _cmd_hex(cfg, args) -> None:
    hcfg = HexConfig(
        delta=_get(cfg, args, "hex.delta", float, 1.0, "delta"),
        rho=_get(cfg, args, "hex.rho", float, 0.9, "rho"),
        eta=_get(cfg, args, "hex.eta", float, 1.0, "eta"),
        threshold=_get(cfg, args, "sir.threshold", float, 1.0, "threshold"),
        alpha=_get(cfg, args, "attenuation.alpha", float, 4.0, "alpha"),
    )
    window = _window_from_cfg(cfg, args)
    pts = _points_from_cfg(cfg, args, args.seed)
    cls = classify_faces(pts, hcfg, window)
    circuit = find_closed_circuit(cls)
    print(f"faces={cls.n_faces} closed={int(cls.closed.sum())} "
          f"enclosed={circuit is not None}", file=sys.stderr)
    _write_out(args, face_reports_csv(cls))


def _cmd_square(cfg, args) -> None:
    model = _model_from_cfg(cfg, args)
    M = _get(cfg, args, "square.M", float, None, "cap_m")
    if M is None:
        raise ConfigError("square needs --cap-m (square.M)")
    scfg = SquareConfig(
        M=M,
        threshold=_get(cfg, args, "sir.threshold", float, 1.0, "threshold"),
        model=model,
        exclude_receiver=_get(cfg, args, "sir.exclude_receiver", _bool, True, None),
    )
    lam = _get(cfg, args, "process.intensity", float, None, "intensity")
    if lam is None:
        raise ConfigError("square needs --intensity (process.intensity)")
    cells = _get(cfg, args, "square.cells", int, 16, "cells")
    w = cells * scfg.side
    window = Window(w, w)
    if args.trials > 1:
        records = [
            percolation_trial(lam, scfg, window, derive_trial_seed(args.seed, k))
            for k in range(args.trials)
        ]
        _write_out(args, trial_records_csv(records))
    else:
        pts = sample(PointProcessConfig(kind="poisson", intensity=lam, seed=args.seed), window)
        cls = classify_edges(pts, scfg, window)
        _write_out(args, edge_reports_csv(cls))


def _cmd_bounds(cfg, args) -> None:
    model = _model_from_cfg(cfg, args)
    lam = _get(cfg, args, "process.intensity", float, None, "intensity")
    M = _get(cfg, args, "square.M", float, None, "cap_m")
    if lam is None or M is None:
        raise ConfigError("bounds needs --intensity and --cap-m (process.intensity, square.M)")
    bcfg = BoundsConfig(
        lam=lam,
        M=M,
        T=_get(cfg, args, "sir.threshold", float, 1.0, "threshold"),
        model=model,
        K=_get(cfg, args, "bounds.K", float, 1.0, "constant_k"),
        area_convention=_get(cfg, args, "bounds.area_convention", str, "area", None),
    )
    rep = evaluate(bcfg)
    header = "lambda,M,T,K,p_A,p1,p2,q,series_value,subcritical_series"
    row = (f"{bcfg.lam!r},{bcfg.M!r},{bcfg.T!r},{bcfg.K!r},{rep.p_A!r},{rep.p1!r},"
           f"{rep.p2!r},{rep.q!r},{rep.series_value!r},{int(rep.subcritical_series)}")
    _write_out(args, header + "\n" + row + "\n")


def _cmd_color(cfg, args) -> None:
    mode = _get(cfg, args, "color.mode", str, "upper_bound", "mode")
    n = _get(cfg, args, "process.n", int, 500, "n")
    if mode == "upper_bound":
        ccfg = ColoringConfig(
            n=n, mode=mode,
            c=_get(cfg, args, "color.c", float, 4.0, "cell_c"),
            delta=_get(cfg, args, "color.delta", float, 0.5, "slack"),
        )
    else:
        ccfg = ColoringConfig(
            n=n, mode=mode,
            f_name=_get(cfg, args, "color.f", str, "constant", "f_name"),
            omega=_get(cfg, args, "color.omega", float, 1.0, "omega"),
            threshold=_get(cfg, args, "sir.threshold", float, 1.0, "threshold"),
        )
    model = _model_from_cfg(cfg, args)
    threshold = _get(cfg, args, "sir.threshold", float, 1.0, "threshold")
    if args.export_assignment:
        pts = sample(PointProcessConfig(kind="uniform_n", n=n, seed=args.seed),
                     Window(1.0, 1.0))
        _write_out(args, assignment_csv(pts, assign_colors(pts, ccfg)))
        return
    records = [
        connectivity_trial(ccfg, model, threshold, derive_trial_seed(args.seed, k))
        for k in range(args.trials)
    ]
    _write_out(args, connectivity_records_csv(records))


def _cmd_sweep(cfg, args) -> None:
    spec_path = args.spec
    try:
        with open(spec_path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        print(f"error: cannot read sweep spec: {exc}", file=sys.stderr)
        raise SystemExit(IO_ERROR)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"sweep spec {spec_path} is not valid JSON: {exc}") from exc
    try:
        axes = {}
        for name, ax in raw["axes"].items():
            if isinstance(ax, dict):
                axes[name] = list(
                    np.linspace(float(ax["min"]), float(ax["max"]), int(ax["steps"]))
                )
            else:
                axes[name] = [float(v) for v in ax]
        spec = SweepSpec(
            experiment=raw["experiment"],
            axes=axes,
            fixed=raw.get("fixed", {}),
            trials=int(raw.get("trials", 1)),
            base_seed=int(raw.get("base_seed", args.seed)),
            workers=args.workers if args.workers is not None else raw.get("workers", 1),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad sweep spec: {exc}") from exc
    result = run_sweep(spec)
    for pt, reason in result.skipped:
        print(f"skipped {pt}: {reason}", file=sys.stderr)
    _write_out(args, emit(result, args.format))


def make_parser() -> argparse.ArgumentParser:
    # global flags are accepted both before and after the subcommand
    gp = argparse.ArgumentParser(add_help=False)
    gp.add_argument("--config", default=argparse.SUPPRESS,
                    help="flat key = value config file")
    gp.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    gp.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    gp.add_argument("--out", default=argparse.SUPPRESS,
                    help="output path (default stdout)")
    gp.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="sirperc", description=__doc__, parents=[gp])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--intensity", type=float, default=None)
        sp.add_argument("--width", type=float, default=None)
        sp.add_argument("--height", type=float, default=None)
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--r0", type=float, default=None)
        sp.add_argument("--attenuation-kind", dest="attenuation_kind", default=None)
        sp.add_argument("--threshold", type=float, default=None)

    sp = sub.add_parser("sample", parents=[gp], help="sample a point process to CSV")
    common(sp)
    sp = sub.add_parser("build-graph", parents=[gp], help="SIR graph edge list for one realization")
    common(sp)
    sp = sub.add_parser("hex", parents=[gp], help="hexagonal face classification CSV")
    common(sp)
    sp.add_argument("--delta", type=float, default=None)
    sp.add_argument("--rho", type=float, default=None)
    sp.add_argument("--eta", type=float, default=None)
    sp = sub.add_parser("square", parents=[gp], help="square-lattice edge classification / trials")
    common(sp)
    sp.add_argument("--cap-m", dest="cap_m", type=float, default=None)
    sp.add_argument("--cells", type=int, default=None)
    sp.add_argument("--trials", type=int, default=1)
    sp = sub.add_parser("bounds", parents=[gp], help="evaluate the analytic bound chain")
    common(sp)
    sp.add_argument("--cap-m", dest="cap_m", type=float, default=None)
    sp.add_argument("--constant-k", dest="constant_k", type=float, default=None)
    sp = sub.add_parser("color", parents=[gp], help="coloring connectivity trials")
    common(sp)
    sp.add_argument("--mode", choices=("upper_bound", "lower_bound"), default=None)
    sp.add_argument("--cell-c", dest="cell_c", type=float, default=None)
    sp.add_argument("--slack", type=float, default=None)
    sp.add_argument("--f-name", dest="f_name", default=None)
    sp.add_argument("--omega", type=float, default=None)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--export-assignment", action="store_true")
    sp = sub.add_parser("sweep", parents=[gp], help="run a JSON sweep spec")
    sp.add_argument("spec", help="sweep spec JSON file")
    return p


_COMMANDS = {
    "sample": _cmd_sample,
    "build-graph": _cmd_build_graph,
    "hex": _cmd_hex,
    "square": _cmd_square,
    "bounds": _cmd_bounds,
    "color": _cmd_color,
    "sweep": _cmd_sweep,
}


_GLOBAL_DEFAULTS = {"config": None, "seed": 0, "workers": None, "out": None,
                    "format": "csv"}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    for dest, default in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, dest):
            setattr(args, dest, default)
    cfg = {}
    try:
        if args.config:
            cfg = _parse_config_file(args.config)
        _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
