"""Figure rendering for solve results, verification reports and sweeps.

All figures are written as SVG with a fixed hash salt and no creation-date
metadata, so identical inputs produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "dualmink"

import matplotlib.pyplot as plt
import numpy as np

from dualmink.body import SupportFunction, evaluate_geometry
from dualmink.verify import dual_density


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def render_result_figure(h: SupportFunction, f, q: float, path) -> Path:
    """Boundary curve vs unit circle (S^1) or h and g/f-1 heat maps (S^2)."""
    grid = h.grid
    geom = evaluate_geometry(h)
    if grid.dim == 1:
        fig, ax = plt.subplots(figsize=(5, 5))
        order = np.argsort(grid.theta)
        pts = geom.boundary[order]
        pts = np.vstack([pts, pts[:1]])
        circle = np.linspace(0, 2 * np.pi, 361)
        ax.plot(np.cos(circle), np.sin(circle), "--", color="0.6", lw=1,
                label="unit circle")
        ax.plot(pts[:, 0], pts[:, 1], color="C0", lw=1.5, label="boundary")
        ax.set_aspect("equal")
        ax.legend(loc="upper right", fontsize=8)
        ax.set_title(f"solved body, q={q:g}")
        return _save(fig, path)

    nlat, nlon = grid.resolution
    dens = dual_density(geom, q)
    rel = dens.values / np.asarray(f) - 1.0
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.6))
    lon = np.degrees(grid.phi.reshape(nlat, nlon))
    lat = 90.0 - np.degrees(grid.theta.reshape(nlat, nlon))
    for ax, field, label in ((axes[0], h.values, "support h"),
                             (axes[1], rel, "g/f - 1")):
        pc = ax.pcolormesh(lon, lat, field.reshape(nlat, nlon), shading="nearest")
        fig.colorbar(pc, ax=ax)
        ax.set_xlabel("longitude")
        ax.set_ylabel("latitude")
        ax.set_title(label)
    fig.suptitle(f"solved body, q={q:g}")
    fig.tight_layout()
    return _save(fig, path)


def render_verify_figure(h: SupportFunction, g, bound: float, delta2: float,
                         path) -> Path:
    """Density profile with the stability margin summarized in the title."""
    grid = h.grid
    if grid.dim == 1:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        order = np.argsort(grid.theta)
        ax.plot(grid.theta[order], np.asarray(g)[order], color="C1", lw=1.5)
        ax.set_xlabel("angle")
        ax.set_ylabel("density g")
    else:
        nlat, nlon = grid.resolution
        fig, ax = plt.subplots(figsize=(6, 3.5))
        lon = np.degrees(grid.phi.reshape(nlat, nlon))
        lat = 90.0 - np.degrees(grid.theta.reshape(nlat, nlon))
        pc = ax.pcolormesh(lon, lat, np.asarray(g).reshape(nlat, nlon),
                           shading="nearest")
        fig.colorbar(pc, ax=ax)
        ax.set_xlabel("longitude")
        ax.set_ylabel("latitude")
    ax.set_title(f"delta2 = {delta2:.3e}, stability bound = {bound:.3e}")
    fig.tight_layout()
    return _save(fig, path)


def render_sweep_figure(rows: list, path) -> Path:
    """delta2 against the stability bound for every converged sweep row."""
    fig, ax = plt.subplots(figsize=(5, 4))
    xs = [r["stability_bound"] for r in rows if r.get("converged")]
    ys = [r["delta2"] for r in rows if r.get("converged")]
    if xs:
        lim = max(max(xs), max(ys)) * 1.1
        ax.plot([0, lim], [0, lim], "--", color="0.6", lw=1, label="bound = delta2")
        ax.plot(xs, ys, "o", ms=4, color="C0", label="sweep rows")
        ax.set_xlim(0, lim)
        ax.set_ylim(0, lim)
    ax.set_xlabel("stability bound")
    ax.set_ylabel("delta2 to unit ball")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
