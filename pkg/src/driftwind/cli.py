"""Command-line front end: reproducible, config-driven runs.

Subcommands:
    build-field   construct and cache the tile-field grids + manifest
    walk          discrete lattice walks (CSV) and coalescence reports
    integrate     trajectories, crossing events, slope records
    stats         birkhoff / mixing / slope-threshold estimators (JSON)
    export        tessellation JSON, point-process CSV
    report        render figures from a run directory's artifacts

Exit codes: 0 ok, 1 user error, 2 internal error.  Identical configs
write identical bytes; runs live under <output_dir>/<config-hash>/.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import report as report_mod
from .arrows import coalescence_check, walk
from .config import (
    ConfigError,
    config_hash,
    load_config,
    make_arrow_spec,
    make_integrator_spec,
    serialize_config,
)
from .flow import SpaceTimeField, integrate, spacetime_integrate, visited_cells
from .gridio import read_grid, write_grid
from .mollify import (
    BumpKernel,
    TiledField,
    TileField,
    build_cached_pair,
    build_tile_field,
    measure_grid_error,
    mirror_grid,
)
from .poisson import LatticeProcess, WarpMap, DeformedField, sample_process, warp_eval
from .potential import build_tessellation, tessellation_to_json
from .stats import birkhoff_average, mixing_cesaro, slope_record


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are user errors (exit 1)
        raise ConfigError(message)


def _run_dir(cfg: dict) -> Path:
    return Path(cfg["output_dir"]) / config_hash(cfg)


def _fields_dir(cfg: dict) -> Path:
    return _run_dir(cfg) / "fields"


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# build-field


def cmd_build_field(cfg: dict, force: bool = False) -> Path:
    fields = _fields_dir(cfg)
    manifest_path = fields / "manifest.json"
    if manifest_path.exists() and not force:
        manifest = json.loads(manifest_path.read_text())
        if manifest.get("config_hash") == config_hash(cfg):
            print(f"fields cached: {fields}")
            return manifest_path
    tess = build_tessellation(cfg["delta"])
    kernel = BumpKernel(cfg["delta"])
    resolution = int(cfg["grid"]["resolution"])
    vr, vu = build_cached_pair(tess, kernel, resolution=resolution,
                               quad_tol=cfg["kernel"]["tolerance"])
    fields.mkdir(parents=True, exist_ok=True)
    write_grid(fields / "vr.dwgrid", "r", cfg["delta"], vr.grid)
    write_grid(fields / "vu.dwgrid", "u", cfg["delta"], mirror_grid(vr.grid))
    interp_error = measure_grid_error(vr, n_points=40, seed=cfg["seed"], tol=1e-8)
    rng = np.random.default_rng(cfg["seed"])
    pts = rng.uniform(0.0, 1.0, (100000, 2))
    sums = vr.eval_batch(pts).sum(axis=1)
    manifest = {
        "config_hash": config_hash(cfg),
        "delta": cfg["delta"],
        "resolution": resolution,
        "cell_count": tess.cell_count,
        "interpolation_error": interp_error,
        "field_sum_min": float(sums.min()),
        "files": ["vr.dwgrid", "vu.dwgrid"],
    }
    _write_text(manifest_path, json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    _write_text(_run_dir(cfg) / "config.json", serialize_config(cfg))
    print(f"fields built: {fields} (c >= {manifest['field_sum_min']:.6f})")
    return manifest_path


def _load_fields(cfg: dict):
    """Tessellation, kernel and the (V_r, V_u) pair per the configured mode."""
    tess = build_tessellation(cfg["delta"])
    kernel = BumpKernel(cfg["delta"])
    if cfg["grid"]["mode"] == "quadrature":
        vr = build_tile_field(tess, kernel, mode="quadrature", which="r",
                              quad_tol=cfg["kernel"]["tolerance"])
        vu = build_tile_field(tess, kernel, mode="quadrature", which="u",
                              quad_tol=cfg["kernel"]["tolerance"])
        return tess, kernel, vr, vu
    fields = _fields_dir(cfg)
    manifest_path = fields / "manifest.json"
    if not manifest_path.exists():
        raise ConfigError(
            f"no field manifest under {fields}; run 'driftwind build-field' "
            "with this config first"
        )
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("config_hash") != config_hash(cfg):
        raise ConfigError(
            f"manifest under {fields} belongs to a different config; rebuild fields"
        )
    which_r, delta_r, grid_r = read_grid(fields / "vr.dwgrid")
    if which_r != "r" or abs(delta_r - cfg["delta"]) > 1e-15:
        raise ConfigError(f"grid file {fields / 'vr.dwgrid'} does not match the config")
    res = grid_r.shape[1] - 1
    vr = TileField(which="r", delta=cfg["delta"], mode="cached", tess=tess,
                   kernel=kernel, resolution=res, grid=grid_r)
    vu = TileField(which="u", delta=cfg["delta"], mode="cached", tess=tess,
                   kernel=kernel, resolution=res, grid=grid_r)
    return tess, kernel, vr, vu


def _make_warp(cfg: dict) -> WarpMap | None:
    w = cfg["warp"]
    if not w["enabled"]:
        return None
    if w["lattice_hook"]:
        return WarpMap(LatticeProcess(), LatticeProcess())
    return WarpMap(
        sample_process(w["intensity"], int(w["seed_x"]), (-2.0, 2.0)),
        sample_process(w["intensity"], int(w["seed_y"]), (-2.0, 2.0)),
    )


# ---------------------------------------------------------------------------
# walk


def cmd_walk(cfg: dict, starts, steps: int, coalescence: bool) -> list[Path]:
    spec = make_arrow_spec(cfg)
    out_dir = _run_dir(cfg) / "walks"
    written = []
    for idx, z in enumerate(starts):
        w = walk(spec, z, steps)
        lines = ["n,i,j"]
        lines += [f"{n},{p[0]},{p[1]}" for n, p in enumerate(w.positions)]
        path = out_dir / f"walk_{idx:03d}.csv"
        _write_text(path, "\n".join(lines) + "\n")
        written.append(path)
    if coalescence and len(starts) >= 2:
        rep = coalescence_check(spec, starts, steps)
        doc = {
            "merged": [
                {"a": list(a), "b": list(b), "meet": list(m)} for a, b, m in rep.merged
            ],
            "unresolved": [{"a": list(a), "b": list(b)} for a, b in rep.unresolved],
        }
        path = out_dir / "coalescence.json"
        _write_text(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")
        written.append(path)
    print(f"wrote {len(written)} file(s) under {out_dir}")
    return written


# ---------------------------------------------------------------------------
# integrate


def cmd_integrate(cfg: dict, starts, horizon: float | None) -> list[Path]:
    tess, kernel, vr, vu = _load_fields(cfg)
    spec = make_arrow_spec(cfg)
    field = TiledField(spec=spec, vr=vr, vu=vu)
    warp = _make_warp(cfg)
    ispec = make_integrator_spec(cfg, horizon)
    out_dir = _run_dir(cfg) / "integrate"
    written = []
    for idx, z in enumerate(starts):
        if warp is None:
            traj = integrate(field, z, ispec)
            conj_residual = None
        else:
            deformed = DeformedField(warp=warp, psi=field)
            traj = integrate(deformed, z, ispec)
            matched = integrate(field, warp_eval(warp, z[0], z[1]), ispec)
            conj_residual = 0.0
            for p, q in zip(traj.points, matched.points):
                img = warp_eval(warp, p[0], p[1])
                conj_residual = max(conj_residual, float(np.max(np.abs(img - q))))
            lines = ["t,x,y"]
            lines += [
                f"{_fmt(t)},{_fmt(p[0])},{_fmt(p[1])}"
                for t, p in zip(matched.times, matched.points)
            ]
            path = out_dir / f"matched_{idx:03d}.csv"
            _write_text(path, "\n".join(lines) + "\n")
            written.append(path)
        lines = ["t,x,y"]
        lines += [f"{_fmt(t)},{_fmt(p[0])},{_fmt(p[1])}" for t, p in zip(traj.times, traj.points)]
        path = out_dir / f"traj_{idx:03d}.csv"
        _write_text(path, "\n".join(lines) + "\n")
        written.append(path)
        lines = ["t,axis,line,cell_i,cell_j"]
        lines += [
            f"{_fmt(ev.time)},{ev.axis},{ev.line},{ev.cell[0]},{ev.cell[1]}"
            for ev in traj.events
        ]
        epath = out_dir / f"events_{idx:03d}.csv"
        _write_text(epath, "\n".join(lines) + "\n")
        written.append(epath)
        start_cell = visited_cells(traj)[0]
        record = {
            "start": [float(z[0]), float(z[1])],
            "start_cell": list(start_cell),
            "cells_visited": len(visited_cells(traj)),
            "end": [float(traj.points[-1][0]), float(traj.points[-1][1])],
        }
        if float(traj.points[:, 0].min()) > 0.0:
            rec = slope_record(traj, burn_in=0.0, thresholds=[0.05, 20.0])
            record["slope_min"] = rec.final_min
            record["slope_max"] = rec.final_max
            record["crossings"] = [[t, c, d] for t, c, d in rec.crossings]
        if conj_residual is not None:
            record["conjugacy_residual"] = conj_residual
        spath = out_dir / f"slopes_{idx:03d}.json"
        _write_text(spath, json.dumps(record, sort_keys=True, indent=2) + "\n")
        written.append(spath)
        summary = f"start={tuple(z)} cells={record['cells_visited']}"
        if "slope_min" in record:
            summary += f" slope_min={record['slope_min']:.4g} slope_max={record['slope_max']:.4g}"
        if conj_residual is not None:
            summary += f" conjugacy_residual={conj_residual:.3e}"
        print(summary)
    return written


# ---------------------------------------------------------------------------
# stats


def cmd_stats(cfg: dict, estimator: str, params: dict) -> Path:
    out_dir = _run_dir(cfg) / "stats"
    if estimator == "birkhoff":
        tess, kernel, vr, vu = _load_fields(cfg)
        field = TiledField(spec=make_arrow_spec(cfg), vr=vr, vu=vu)
        observable = {
            "sum": lambda v: float(v[0] + v[1]),
            "first": lambda v: float(v[0]),
            "second": lambda v: float(v[1]),
            "one": lambda v: 1.0,
        }[params.get("observable", "sum")]
        res = birkhoff_average(
            field,
            observable,
            center=params.get("center", (0.0, 0.0)),
            radius=params.get("radius", 4.0),
            samples=params.get("samples", 10000),
            seed=cfg["seed"],
        )
        record = res.to_record()
        record["estimator"] = "birkhoff"
        record["observable"] = params.get("observable", "sum")
    elif estimator == "mixing":
        tess, kernel, vr, vu = _load_fields(cfg)
        field = TiledField(spec=make_arrow_spec(cfg), vr=vr, vu=vu)
        threshold = params.get("threshold", 1.5)
        res = mixing_cesaro(
            lambda p: field.eval(p)[0] > threshold,
            lambda p: field.eval(p)[1] > threshold,
            radius=params.get("radius", 8.0),
            samples=params.get("samples", 4000),
            shifts=params.get("shifts", 48),
            seed=cfg["seed"],
        )
        record = res.to_record()
        record["estimator"] = "mixing"
        record["threshold"] = threshold
    elif estimator == "slope-thresholds":
        tess, kernel, vr, vu = _load_fields(cfg)
        field = TiledField(spec=make_arrow_spec(cfg), vr=vr, vu=vu)
        start = params.get("start", (0.1, 0.1))
        ispec = make_integrator_spec(cfg, params.get("horizon"))
        traj = integrate(field, start, ispec)
        rec = slope_record(
            traj, burn_in=params.get("burn_in", 0.0), thresholds=params.get("thresholds", [0.05, 20.0])
        )
        record = {
            "estimator": "slope-thresholds",
            "start": [float(start[0]), float(start[1])],
            "slope_min": rec.final_min,
            "slope_max": rec.final_max,
            "crossings": [[t, c, d] for t, c, d in rec.crossings],
            "seed": cfg["seed"],
        }
    else:
        raise ConfigError(f"unknown estimator {estimator!r}")
    path = out_dir / f"{estimator}.json"
    _write_text(path, json.dumps(record, sort_keys=True, indent=2) + "\n")
    print(json.dumps(record, sort_keys=True))
    return path


# ---------------------------------------------------------------------------
# export


def cmd_export(cfg: dict, what: str) -> Path:
    out_dir = _run_dir(cfg) / "export"
    if what == "tessellation":
        tess = build_tessellation(cfg["delta"])
        path = out_dir / "tessellation.json"
        _write_text(path, tessellation_to_json(tess) + "\n")
    elif what in ("process-x", "process-y"):
        w = cfg["warp"]
        seed = int(w["seed_x"] if what == "process-x" else w["seed_y"])
        proc = sample_process(w["intensity"], seed, (-20.0, 20.0))
        path = out_dir / f"{what.replace('-', '_')}.csv"
        _write_text(path, proc.to_csv())
    else:
        raise ConfigError(f"unknown export target {what!r}")
    print(f"wrote {path}")
    return path


# ---------------------------------------------------------------------------
# entry point


def _parse_point(text: str):
    try:
        x, y = text.split(",")
        return (float(x), float(y))
    except ValueError:
        raise ConfigError(f"expected 'x,y', got {text!r}")


def _parse_cell(text: str):
    x, y = _parse_point(text)
    return (int(x), int(y))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="driftwind", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="path to the JSON run config")
        return p

    p = with_config(sub.add_parser("build-field", help="build and cache tile-field grids"))
    p.add_argument("--force", action="store_true", help="rebuild even if cached")

    p = with_config(sub.add_parser("walk", help="discrete lattice walks"))
    p.add_argument("--start", action="append", required=True, metavar="i,j")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--coalescence", action="store_true")

    p = with_config(sub.add_parser("integrate", help="integrate trajectories"))
    p.add_argument("--start", action="append", required=True, metavar="x,y")
    p.add_argument("--horizon", type=float, default=None)

    p = with_config(sub.add_parser("stats", help="run an estimator"))
    p.add_argument("--estimator", required=True,
                   choices=["birkhoff", "mixing", "slope-thresholds"])
    p.add_argument("--observable", default="sum")
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--start", default=None, metavar="x,y")
    p.add_argument("--horizon", type=float, default=None)

    p = with_config(sub.add_parser("export", help="export data artifacts"))
    p.add_argument("--what", required=True,
                   choices=["tessellation", "process-x", "process-y"])

    p = with_config(sub.add_parser("report", help="render figures for a run"))

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config)
        if args.command == "build-field":
            cmd_build_field(cfg, force=args.force)
        elif args.command == "walk":
            starts = [_parse_cell(s) for s in args.start]
            cmd_walk(cfg, starts, args.steps, args.coalescence)
        elif args.command == "integrate":
            starts = [_parse_point(s) for s in args.start]
            cmd_integrate(cfg, starts, args.horizon)
        elif args.command == "stats":
            params = {}
            if args.radius is not None:
                params["radius"] = args.radius
            if args.samples is not None:
                params["samples"] = args.samples
            if args.threshold is not None:
                params["threshold"] = args.threshold
            if args.start is not None:
                params["start"] = _parse_point(args.start)
            if args.horizon is not None:
                params["horizon"] = args.horizon
            params["observable"] = args.observable
            cmd_stats(cfg, args.estimator, params)
        elif args.command == "export":
            cmd_export(cfg, args.what)
        elif args.command == "report":
            written = report_mod.render_run(cfg)
            for path in written:
                print(f"wrote {path}")
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - internal failure path
        import traceback

        traceback.print_exc()
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
