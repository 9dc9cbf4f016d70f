"""``twodelay`` command line.

Every subcommand writes its files into ``--out-dir`` (or ``$TWODELAY_OUT_DIR``)
and finishes by writing ``run.json``, a manifest that can be passed back via
``--config`` to repeat the run. Exit codes: 0 ok, 2 bad input, 3 empty or
degenerate result, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from . import errors as E
from .io import to_json, write_json

OUT_ENV = "TWODELAY_OUT_DIR"

EMPTY = (E.EmptyRegion, E.EmptyCurve, E.NoCusp, E.NoBracket, E.NoPositiveEquilibrium,
         E.NotOscillatory, E.SeedUnstable, E.InfiniteTransition, E.MarginalStability)


class Run:
    """Collects outputs for the manifest."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out_dir)
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        p = self.out / name
        self.files.append(str(p))
        return p

    def emit(self, obj) -> None:
        print(to_json(obj))


# --------------------------------------------------------------------------
# commands


def cmd_curves(run: Run):
    from .bifcurves import CurvePoint, sample_curve_runs, write_curve_csv
    from .plots import plot_curves
    from .region import default_box

    a = run.args
    box = _box(a.bbox, a.A, a.R, default_box)
    turn = 0.1 if a.tol is None else max(min(a.tol * 1e3, 0.5), 1e-3)
    pts, lines = {}, {}
    for j in range(1, a.jmax + 1):
        runs = sample_curve_runs(j, a.A, a.R, bbox=box, max_turn=turn)
        pts[j] = [CurvePoint(*row) for r in runs for row in zip(*r)]
        lines[j] = [(r[1], r[2]) for r in runs]
    write_curve_csv(run.path("curves.csv"), pts)
    plot_curves(run.path("curves.svg"), a.A, a.R, lines, box)
    run.emit({"A": a.A, "R": a.R, "jmax": a.jmax, "points": sum(len(v) for v in pts.values()), "box": box})


def _box(bbox, A, R, default_box):
    if bbox is None:
        return default_box(A, R)
    if len(bbox) == 1:
        w = float(bbox[0])
        return (-w, w, -w, w)
    if len(bbox) == 4:
        return tuple(float(v) for v in bbox)
    raise E.InvalidParameters("--bbox takes 1 or 4 numbers")


def _walk_opts(a):
    return {} if a.tol is None else {"tiny": a.tol}


def cmd_region(run: Run):
    from .plots import plot_region
    from .region import stable_region_boundary, stable_region_raster, write_boundary_csv, write_region_csv

    a = run.args
    res = stable_region_boundary(a.A, a.R, **_walk_opts(a))
    ras = stable_region_raster(a.A, a.R, resolution=a.resolution)
    write_boundary_csv(run.path("boundary.csv"), res)
    write_region_csv(run.path("region.csv"), ras)
    plot_region(run.path("region.svg"), res, ras)
    out = res.summary()
    out.update(raster_area_ratio=ras.area_ratio, spot_check_failures=ras.spot_check_failures,
               arc_lengths=res.arc_lengths(), dropped_tags=list(res.dropped_tags))
    write_json(run.path("region.json"), out)
    run.emit(out)


def cmd_area(run: Run):
    from .region import stable_region_boundary, stable_region_raster

    a = run.args
    if a.method == "raster":
        r = stable_region_raster(a.A, a.R, resolution=a.resolution)
        out = {"A": a.A, "R": a.R, "area": r.area, "area_ratio": r.area_ratio, "method": "raster"}
    else:
        out = stable_region_boundary(a.A, a.R, **_walk_opts(a)).summary()
    write_json(run.path("area.json"), out)
    run.emit(out)


def cmd_asymptotic(run: Run):
    from .region import asymptotic_region, write_boundary_csv

    a = run.args
    r = asymptotic_region(a.n, offset=a.offset, **_walk_opts(a))
    write_boundary_csv(run.path("boundary.csv"), r.region)
    out = {"n": r.n, "R": r.R, "A": r.A, "area_ratio": r.area_ratio,
           "linear_extension": r.linear_extension, "junction": list(r.junction or ())}
    write_json(run.path("asymptotic.json"), out)
    run.emit(out)


def cmd_events(run: Run):
    from .events import event_dict, event_ladder, write_events_csv
    from .plots import plot_events

    a = run.args
    kw = {} if a.tol is None else {"tol": a.tol}
    ev = event_ladder(a.R, a.A_max, ratio=a.ratio, **kw)
    write_events_csv(run.path("events.csv"), ev)
    write_json(run.path("events.json"), [event_dict(e) for e in ev])
    plot_events(run.path("events.svg"), ev, a.R)
    unrefined = sum(not e.refined for e in ev)
    run.emit({"R": a.R, "A_max": a.A_max, "events": len(ev), "unrefined": unrefined})


def cmd_atlas(run: Run):
    from .events import atlas_sweep
    from .plots import plot_atlas

    a = run.args
    atlas = atlas_sweep(a.R_lo, a.R_hi, a.steps, a.A_max, ladder=not a.no_ladder, ratio=a.ratio, threads=a.threads)
    for R, col in atlas.items():
        write_json(run.path(f"atlas_R{R:.6f}.json"), {"R": R, **col})
    write_json(run.path("atlas.json"), atlas)
    plot_atlas(run.path("atlas.svg"), atlas)
    run.emit({"columns": len(atlas), "errors": sum(len(c["errors"]) for c in atlas.values())})


def cmd_roots(run: Run):
    from .chareq import DdeParams, count_unstable, unstable_roots
    from .io import write_csv

    a = run.args
    p = DdeParams(a.A, a.B, a.C, a.R)
    roots = unstable_roots(p)
    cnt = count_unstable(p)
    write_csv(run.path("roots.csv"), ("re", "im", "residual"), [(r.re, r.im, r.residual) for r in roots])
    run.emit({"params": [p.A, p.B, p.C, p.R], "total_unstable": cnt.total_unstable,
              "real_unstable": cnt.real_unstable,
              "roots": [{"re": r.re, "im": r.im, "residual": r.residual} for r in roots]})


def cmd_simulate(run: Run):
    from .chareq import DdeParams
    from .ddesim import (HistorySpec, PlateletParams, integrate_linear, integrate_platelet,
                         linearize_platelet, measure_oscillation, platelet_equilibrium, write_trajectory_csv)
    from .plots import plot_trajectory

    a = run.args
    if a.model == "platelet":
        pp = PlateletParams(a.gamma, a.beta0, a.hill_n, a.theta, a.f, a.R)
        base = platelet_equilibrium(pp)
        if a.pulse is None:
            hist = HistorySpec("constant", base + 0.5)
        else:
            hist = HistorySpec("equilibrium_plus_pulse", base, a.pulse)
        h = a.h if a.h is not None else 1.0 / 2000
        traj = integrate_platelet(pp, hist, a.t_end, h)
        lin = linearize_platelet(pp)
        extra = {"equilibrium": base, "linearized": [lin.A, lin.B, lin.C, lin.R]}
    else:
        p = DdeParams(a.A, a.B, a.C, a.R)
        base = 0.0
        hist = HistorySpec("equilibrium_plus_pulse", 0.0, 1e-3 if a.pulse is None else a.pulse)
        h = a.h if a.h is not None else 1e-3
        traj = integrate_linear(p, hist, a.t_end, h)
        extra = {}
    write_trajectory_csv(run.path("trajectory.csv"), traj)
    plot_trajectory(run.path("trajectory.svg"), traj, base)
    summary = {"model": a.model, "h": traj.h, "t_end": float(traj.times[-1]), "final": float(traj.values[-1]), **extra}
    try:
        osc = measure_oscillation(traj, base)
        summary.update(growth_rate=osc.growth_rate, period=osc.period, stable_flag=osc.growth_rate < 0)
    except E.NotOscillatory:
        summary.update(growth_rate=None, period=None, stable_flag=abs(traj.values[-1] - base) < abs(traj.values[0] - base))
    write_json(run.path("summary.json"), summary)
    run.emit(summary)


def cmd_transition(run: Run):
    from .bifcurves import degeneracy_line, transition_point

    a = run.args
    t = transition_point(a.j, a.R)
    out = {"j": t.j, "A_star": t.A_star, "B_star": t.B_star, "C_star": t.C_star, "parity": t.parity}
    if math.isfinite(t.A_star):
        d = degeneracy_line(a.j, a.R)
        out.update(offset=d.offset, direction=list(d.direction))
    run.emit(out)


def cmd_spur(run: Run):
    from .events import find_spur

    a = run.args
    s = find_spur(a.j, a.R, with_fraction=not a.no_fraction)
    out = {"j": s.j, "A_cusp": s.A_cusp, "A_join": s.A_join, "length": s.length,
           "cross_section_fraction": s.cross_section_fraction, "A_island": s.A_island}
    write_json(run.path("spur.json"), out)
    run.emit(out)


def cmd_starting_point(run: Run):
    from .bifcurves import starting_point

    sp = starting_point(run.args.R)
    run.emit({"R": run.args.R, "A0": sp.A0, "B0": sp.B0, "C0": sp.C0})


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="relative refinement tolerance")
    common.add_argument("--threads", type=int, default=1, help="worker processes (output is unchanged)")
    common.add_argument("--out-dir", default=None, help=f"output directory (default ${OUT_ENV} or ./twodelay-out)")
    common.add_argument("--config", default=None, help="JSON or YAML file of option values, or a run.json")

    ap = argparse.ArgumentParser(prog="twodelay", description="Stability regions of y' + A y + B y(t-1) + C y(t-R) = 0")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("curves", cmd_curves, "sample bifurcation curves")
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--jmax", type=int, default=20)
    p.add_argument("--bbox", type=float, nargs="+", default=None)

    p = add("region", cmd_region, "stable region boundary and raster")
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--resolution", type=int, default=400)

    p = add("area", cmd_area, "stable area over the minimal diamond")
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--method", choices=("walk", "raster"), default="walk")
    p.add_argument("--resolution", type=int, default=400)

    p = add("asymptotic", cmd_asymptotic, "area ratio as R -> 1/n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--offset", type=float, default=1e-4)

    p = add("events", cmd_events, "event ladder for one R")
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--A-max", dest="A_max", type=float, required=True)
    p.add_argument("--ratio", type=float, default=1.05)

    p = add("atlas", cmd_atlas, "event values over a range of R")
    p.add_argument("--R-lo", dest="R_lo", type=float, required=True)
    p.add_argument("--R-hi", dest="R_hi", type=float, required=True)
    p.add_argument("--steps", type=int, default=7)
    p.add_argument("--A-max", dest="A_max", type=float, required=True)
    p.add_argument("--ratio", type=float, default=1.05)
    p.add_argument("--no-ladder", action="store_true", help="only A0 and transitions")

    p = add("roots", cmd_roots, "unstable characteristic roots")
    for k in "ABCR":
        p.add_argument(f"--{k}", type=float, required=True)

    p = add("simulate", cmd_simulate, "integrate the linear or platelet model")
    p.add_argument("--model", choices=("linear", "platelet"), default="platelet")
    p.add_argument("--A", type=float, default=100.0)
    p.add_argument("--B", type=float, default=35.0)
    p.add_argument("--C", type=float, default=-100.0)
    p.add_argument("--R", type=float, default=1.0 / 3.0)
    p.add_argument("--gamma", type=float, default=100.0)
    p.add_argument("--beta0", type=float, default=168.6)
    p.add_argument("--hill-n", dest="hill_n", type=float, default=4.0)
    p.add_argument("--theta", type=float, default=10.0)
    p.add_argument("--f", type=float, default=0.35)
    p.add_argument("--t-end", dest="t_end", type=float, default=5.0)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--pulse", type=float, default=None, help="history offset above equilibrium")

    p = add("transition", cmd_transition, "transition A*_j and its degeneracy line")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--R", type=float, required=True)

    p = add("spur", cmd_spur, "stability spur j")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--no-fraction", action="store_true")

    p = add("starting-point", cmd_starting_point, "where the stable region is born")
    p.add_argument("--R", type=float, required=True)
    return ap


def load_config(path) -> dict:
    text = Path(path).read_text()
    if str(path).endswith((".yaml", ".yml")):
        import yaml

        data = yaml.safe_load(text) or {}
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise E.InvalidParameters("config must be a mapping")
    if "params" in data and "command" in data:  # a run.json manifest
        data = data["params"]
    return {k.replace("-", "_"): v for k, v in data.items()}


_NOT_CONFIGURABLE = {"command", "func", "config"}


def parse_args(argv):
    ap = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cfg = load_config(known.config)
        subs = ap._subparsers._group_actions[0].choices
        name = next((t for t in argv if t in subs), None)
        if name is not None:
            sub = subs[name]
            dests = {a.dest for a in sub._actions}
            unknown = set(cfg) - dests - _NOT_CONFIGURABLE
            if unknown:
                raise E.InvalidParameters(f"unknown config keys: {sorted(unknown)}")
            # defaults come from the file; flags given on the command line still win
            sub.set_defaults(**{k: v for k, v in cfg.items() if k not in _NOT_CONFIGURABLE})
            for act in sub._actions:
                if act.required and act.dest in cfg:
                    act.required = False
    args = ap.parse_args(argv)
    if args.out_dir is None:
        args.out_dir = os.environ.get(OUT_ENV, "twodelay-out")
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    t0 = time.perf_counter()
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except E.InvalidParameters as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    run = Run(args)
    code, message = 0, None
    try:
        args.func(run)
    except E.InvalidParameters as exc:
        code, message = 2, exc
    except EMPTY as exc:
        code, message = 3, exc
    except E.TwoDelayError as exc:
        code, message = 4, exc
    if message is not None:
        print(f"error: {type(message).__name__}: {message}", file=sys.stderr)
    params = {k: v for k, v in vars(args).items() if k not in ("func", "config")}
    manifest = {
        "command": args.command,
        "params": params,
        "tolerance_overrides": {} if args.tol is None else {"tol": args.tol},
        "outputs": run.files,
        "version": __version__,
        "exit_code": code,
        "error": None if message is None else f"{type(message).__name__}: {message}",
        "wall_clock_seconds": round(time.perf_counter() - t0, 3),
    }
    write_json(Path(args.out_dir) / "run.json", manifest)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
