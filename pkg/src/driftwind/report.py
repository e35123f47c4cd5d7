"""Figure rendering for run artifacts.

Reads the delimited/JSON outputs of a run directory and writes PNG
figures next to them (tessellation, cached field heatmaps, trajectories,
slope records).  Everything is headless (Agg backend).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Polygon as MplPolygon

from .config import config_hash
from .gridio import read_grid
from .potential import build_tessellation

__all__ = ["render_run", "tessellation_figure", "field_figure", "trajectory_figure", "slope_figure"]


def tessellation_figure(tess, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 7))
    cmap = plt.get_cmap("viridis")
    sums = [c.affine[0] + c.affine[1] for c in tess.cells]
    lo, hi = min(sums), max(sums)
    for c in tess.cells:
        s = (c.affine[0] + c.affine[1] - lo) / (hi - lo + 1e-12)
        ax.add_patch(
            MplPolygon(c.polygon, closed=True, facecolor=cmap(0.15 + 0.7 * s),
                       edgecolor="black", linewidth=0.7, alpha=0.85)
        )
        cx, cy = c.polygon.mean(axis=0)
        ax.annotate(f"({c.affine[0]:.2g},{c.affine[1]:.2g})", (cx, cy),
                    ha="center", va="center", fontsize=6)
    named = [i for i, n in enumerate(tess.vertex_names) if not n.startswith("aux")]
    ax.plot(tess.vertices[named, 0], tess.vertices[named, 1], "k.", ms=4)
    for i in named:
        ax.annotate(f"{tess.values[i]:.3g}", tess.vertices[i], fontsize=6,
                    textcoords="offset points", xytext=(3, 3))
    ax.set_xlim(-0.05, 1.05)
    ax.set_ylim(-0.05, 1.05)
    ax.set_aspect("equal")
    ax.set_title(f"tiled potential cells (delta = {tess.delta:.4g})")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def field_figure(grid: np.ndarray, which: str, delta: float, path: Path) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(11, 5))
    for k, ax in enumerate(axes):
        im = ax.imshow(
            grid[k].T, origin="lower", extent=(0, 1, 0, 1), cmap="magma", aspect="equal"
        )
        fig.colorbar(im, ax=ax, shrink=0.85)
        ax.set_title(f"V_{which} component {k + 1} (delta = {delta:.4g})")
    fig.savefig(path, dpi=140, bbox_inches="tight")
    plt.close(fig)


def trajectory_figure(csv_paths: list[Path], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 7))
    xmax = ymax = 1.0
    for cp in csv_paths:
        xs, ys = [], []
        with open(cp) as fh:
            for row in csv.DictReader(fh):
                xs.append(float(row["x"]))
                ys.append(float(row["y"]))
        ax.plot(xs, ys, lw=1.0, label=cp.stem)
        xmax = max(xmax, max(xs))
        ymax = max(ymax, max(ys))
    span = max(xmax, ymax)
    grid_step = max(1, int(span // 20))
    for k in range(0, int(span) + 2, grid_step):
        ax.axvline(k, color="0.85", lw=0.4, zorder=0)
        ax.axhline(k, color="0.85", lw=0.4, zorder=0)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("trajectories over the lattice")
    if len(csv_paths) <= 8:
        ax.legend(fontsize=7)
    fig.savefig(path, dpi=140, bbox_inches="tight")
    plt.close(fig)


def slope_figure(csv_paths: list[Path], json_paths: list[Path], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(8, 5))
    for cp in csv_paths:
        ts, slopes = [], []
        with open(cp) as fh:
            for row in csv.DictReader(fh):
                x, y = float(row["x"]), float(row["y"])
                if x > 0:
                    ts.append(float(row["t"]))
                    slopes.append(y / x)
        if ts:
            ax.plot(ts, slopes, lw=1.0, label=cp.stem)
    for jp in json_paths:
        doc = json.loads(jp.read_text())
        for t, c, d in doc.get("crossings", []):
            ax.plot([t], [c], "kx", ms=5)
    ax.axhline(0.05, color="tab:red", lw=0.7, ls="--")
    ax.axhline(20.0, color="tab:red", lw=0.7, ls="--")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("slope y/x")
    ax.set_title("running slope with threshold crossings")
    if csv_paths and len(csv_paths) <= 8:
        ax.legend(fontsize=7)
    fig.savefig(path, dpi=140, bbox_inches="tight")
    plt.close(fig)


def render_run(cfg: dict) -> list[Path]:
    """Render every figure supported by the artifacts present in the run dir."""
    run_dir = Path(cfg["output_dir"]) / config_hash(cfg)
    out = run_dir / "report"
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    tess = build_tessellation(cfg["delta"])
    p = out / "tessellation.png"
    tessellation_figure(tess, p)
    written.append(p)

    vr_path = run_dir / "fields" / "vr.dwgrid"
    if vr_path.exists():
        which, delta, grid = read_grid(vr_path)
        p = out / "field_vr.png"
        field_figure(grid, which, delta, p)
        written.append(p)

    trajs = sorted((run_dir / "integrate").glob("traj_*.csv"))
    if trajs:
        p = out / "trajectories.png"
        trajectory_figure(trajs, p)
        written.append(p)
        slopes = sorted((run_dir / "integrate").glob("slopes_*.json"))
        p = out / "slopes.png"
        slope_figure(trajs, slopes, p)
        written.append(p)
    return written
