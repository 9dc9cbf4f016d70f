"""SVG figures for the CLI. Plots embed no dates, so reruns give identical files."""

from __future__ import annotations

import math
from fractions import Fraction
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "twodelay"
plt.rcParams["svg.fonttype"] = "none"

_META = {"Date": None, "Creator": "twodelay"}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def _bc_axes(title: str):
    fig, ax = plt.subplots(figsize=(6.5, 6.5))
    ax.set_xlabel("B")
    ax.set_ylabel("C")
    ax.set_aspect("equal", adjustable="box")
    ax.set_title(title)
    return fig, ax


def _draw_mrs(ax, A):
    if A > 0:
        ax.plot([A, 0, -A, 0, A], [0, A, 0, -A, 0], "k--", lw=0.8, label="MRS")


def _draw_lambda0(ax, A, box):
    b = np.array([box[0], box[1]])
    ax.plot(b, -A - b, color="0.4", lw=0.8, label="Lambda_0")


def family_of(R: float, max_den: int = 12):
    """FamilyStructure when R is a small-denominator rational, else None."""
    from .bifcurves import family_structure

    fr = Fraction(R).limit_denominator(max_den)
    if abs(float(fr) - R) > 1e-12 or fr.denominator < 2:
        return None
    return family_structure(fr.numerator, fr.denominator)


def plot_curves(path, A, R, curves: dict, box) -> Path:
    """``curves`` maps j to a list of (B, C) arrays."""
    fam = family_of(R)
    cmap = plt.get_cmap("tab20")
    fig, ax = _bc_axes(f"Bifurcation curves, A={A:.6g}, R={R:.6g}")
    for j, runs in sorted(curves.items()):
        key = fam.classify(j) if fam else j
        colour = cmap((key - 1) % 20)
        for B, C in runs:
            ax.plot(B, C, color=colour, lw=0.6)
    _draw_mrs(ax, A)
    _draw_lambda0(ax, A, box)
    ax.set_xlim(box[0], box[1])
    ax.set_ylim(box[2], box[3])
    return _save(fig, path)


def plot_region(path, res, raster=None) -> Path:
    fig, ax = _bc_axes(f"Stable region, A={res.A:.6g}, R={res.R:.6g}")
    if raster is not None:
        b0, b1, c0, c1 = raster.bbox
        img = np.where(raster.cells == 0, 1.0, np.where(raster.cells < 0, np.nan, 0.0))
        ax.imshow(img, origin="lower", extent=(b0, b1, c0, c1), cmap="Greens", vmin=0, vmax=1.5, alpha=0.6)
    cmap = plt.get_cmap("tab10")
    tags = sorted({a.tag for a in res.boundary})
    for arc in res.boundary:
        ax.plot(arc.B, arc.C, color=cmap(tags.index(arc.tag) % 10), lw=1.2)
    for k, t in enumerate(tags):
        ax.plot([], [], color=cmap(k % 10), label=t)
    _draw_mrs(ax, res.A)
    ax.legend(loc="upper right", fontsize=7)
    return _save(fig, path)


def plot_events(path, events, R) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    kinds = sorted({e.kind for e in events})
    for k, kind in enumerate(kinds):
        xs = [e.A_value for e in events if e.kind == kind]
        ax.plot(xs, [k] * len(xs), "o", ms=4)
    ax.set_yticks(range(len(kinds)))
    ax.set_yticklabels(kinds, fontsize=7)
    ax.set_xlabel("A")
    ax.set_title(f"Boundary events, R={R:.6g}")
    fig.tight_layout()
    return _save(fig, path)


def plot_atlas(path, atlas: dict) -> Path:
    fig, ax = plt.subplots(figsize=(6, 6))
    Rs = sorted(atlas)
    ax.plot(Rs, [atlas[R]["A0"] for R in Rs], "k-", lw=1, label="A0")
    pts = {}
    for R in Rs:
        for j, a in atlas[R]["transitions"].items():
            pts.setdefault(("transition", int(j)), []).append((R, a))
        for e in atlas[R]["events"]:
            if e["kind"] in ("start", "spur_join"):
                continue
            pts.setdefault((e["kind"], 0), []).append((R, e["A"]))
    markers = {"transition": ".", "transferral": "^", "reverse_transferral": "v",
               "tangency": "s", "reverse_tangency": "D", "spur_start": "x"}
    for (kind, _), xy in sorted(pts.items()):
        xy = np.array(xy)
        ax.plot(xy[:, 0], xy[:, 1], markers.get(kind, "o"), ms=3, color="0.3" if kind == "transition" else None)
    ax.set_xlabel("R")
    ax.set_ylabel("A")
    ax.set_title("Event atlas")
    finite = [a for R in Rs for a in atlas[R]["transitions"].values() if math.isfinite(a)]
    if finite:
        ax.set_ylim(min(atlas[R]["A0"] for R in Rs) - 1, max(finite) * 1.05 + 1)
    return _save(fig, path)


def plot_trajectory(path, traj, baseline=None) -> Path:
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(traj.times, traj.values, lw=0.6)
    if baseline is not None:
        ax.axhline(baseline, color="k", lw=0.5, ls="--")
    ax.set_xlabel("t")
    ax.set_ylabel("y")
    fig.tight_layout()
    return _save(fig, path)
