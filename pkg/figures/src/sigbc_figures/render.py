"""Renderers for each figure kind. All output is deterministic: fixed canvas,
fixed colors, and no timestamps in the emitted files."""

from __future__ import annotations

import json
import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import BoundaryNorm

from .recipes import FigureRecipe, SchemaError, load_csv

_FIGSIZE = (7.0, 5.0)
_DPI = 130


def _sigmoid_weight(gap, gamma, delta):
    t = np.clip(gamma * (delta - np.asarray(gap) ** 2), -700, 700)
    return 1.0 / (1.0 + np.exp(-t))


def _g_zero_delta(gamma):
    # marginal curve of the harmonic state: delta = 1 + ln(2*gamma - 1)/gamma
    return 1.0 + np.log(2.0 * gamma - 1.0) / gamma


def _save(fig, out_path):
    stem, _ = os.path.splitext(out_path)
    png = stem + ".png"
    pdf = stem + ".pdf"
    fig.savefig(png, dpi=_DPI)
    fig.savefig(pdf, metadata={"CreationDate": None})
    plt.close(fig)
    return [png, pdf]


def _render_influence(recipe):
    opts = recipe.options
    gammas = opts.get("gammas", [0.0, 1.0, 4.0, 16.0])
    delta = float(opts.get("delta", 1.0))
    gaps = np.linspace(0.0, 2.5, 501)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=_FIGSIZE)
    for gamma in gammas:
        w = _sigmoid_weight(gaps, float(gamma), delta)
        ax1.plot(gaps, w, label=f"$\\gamma={gamma:g}$")
        ax2.plot(gaps, w * gaps)
    ax1.axvline(math.sqrt(delta), color="0.6", lw=0.8, ls=":")
    ax1.set_xlabel("opinion gap")
    ax1.set_ylabel("edge weight")
    ax1.legend(frameon=False, fontsize=8)
    ax2.set_xlabel("opinion gap")
    ax2.set_ylabel("pull strength (weight x gap)")
    fig.suptitle(f"sigmoidal influence, $\\delta={delta:g}$")
    fig.tight_layout()
    return _save(fig, recipe.out_path)


def _render_trajectory(recipe):
    frame = load_csv(recipe, "trajectory")
    t = frame["t"].to_numpy()
    cols = [c for c in frame.columns if c.startswith("x_")]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for col in cols:
        x = frame[col].to_numpy()
        if np.ptp(x) == 0.0:    # pinned rows are the zealots
            ax.plot(t, x, "k--", lw=1.4)
        else:
            ax.plot(t, x, lw=0.9)
    ax.set_xlabel("t")
    ax.set_ylabel("opinion")
    ax.set_title(recipe.options.get("title", "opinion trajectories"))
    fig.tight_layout()
    return _save(fig, recipe.out_path)


def _render_continuation(recipe):
    path = recipe.inputs.get("branch")
    if not path or not os.path.exists(path):
        raise SchemaError("continuation figure needs a 'branch' JSON input")
    with open(path) as fh:
        branch = json.load(fh)
    for key in ("gammas", "records"):
        if key not in branch:
            raise SchemaError(f"branch JSON is missing key {key!r}")
    gammas = np.array(branch["gammas"])
    states = np.array([rec["state"] for rec in branch["records"]])
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    moving = np.ptp(states, axis=0) > 0
    for i in range(states.shape[1]):
        style = ("-", 0.9) if moving[i] else ("--", 1.4)
        ax.plot(gammas, states[:, i], style[0], lw=style[1],
                color=None if moving[i] else "k")
    if branch.get("critical_gamma") is not None:
        ax.axvline(branch["critical_gamma"], color="0.4", ls=":",
                   label=f"fold at $\\gamma={branch['critical_gamma']:.3g}$")
        ax.legend(frameon=False, fontsize=8)
    ax.set_xlabel("$\\gamma$")
    ax.set_ylabel("steady-state opinion")
    ax.set_title(recipe.options.get("title", "harmonic-branch continuation"))
    fig.tight_layout()
    return _save(fig, recipe.out_path)


def _render_heatmap(recipe):
    frame = load_csv(recipe, "counts")
    pivot = frame.pivot_table(index="delta", columns="gamma", values="count",
                              aggfunc="first")
    gammas = pivot.columns.to_numpy(dtype=float)
    deltas = pivot.index.to_numpy(dtype=float)
    counts = pivot.to_numpy(dtype=float)
    vmax = int(max(np.nanmax(counts), 1))
    cmap = plt.get_cmap("viridis", vmax + 1)
    norm = BoundaryNorm(np.arange(-0.5, vmax + 1), vmax + 1)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    mesh = ax.pcolormesh(gammas, deltas, counts, cmap=cmap, norm=norm,
                         shading="nearest")
    fig.colorbar(mesh, ax=ax, ticks=range(vmax + 1), label="stable states")
    if recipe.options.get("overlay_marginal_curve", True):
        lo, hi = gammas.min(), gammas.max()
        xs = np.geomspace(max(lo, 0.5001), hi, 400)
        ys = _g_zero_delta(xs)
        keep = (ys >= deltas.min()) & (ys <= deltas.max())
        ax.plot(xs[keep], ys[keep], "w--", lw=1.6)
    if recipe.options.get("log_gamma", True) and gammas.min() > 0:
        ax.set_xscale("log")
    ax.set_xlabel("$\\gamma$")
    ax.set_ylabel("$\\delta$")
    ax.set_title(recipe.options.get("title", "stable-state counts"))
    fig.tight_layout()
    return _save(fig, recipe.out_path)


def _render_portrait(recipe):
    fps = load_csv(recipe, "fixed_points")
    nullclines = load_csv(recipe, "nullclines")
    basins = load_csv(recipe, "basins")
    fig, ax = plt.subplots(figsize=(5.6, 5.2))
    if len(basins):
        xs = np.sort(basins["x1"].unique())
        ys = np.sort(basins["x2"].unique())
        pol = basins.pivot_table(index="x2", columns="x1",
                                 values="polarization", aggfunc="first")
        pol = pol.reindex(index=ys, columns=xs).to_numpy(dtype=float)
        shade = np.ma.masked_invalid(pol)
        ax.pcolormesh(xs, ys, shade, cmap="Greys", shading="nearest",
                      vmin=0.0, vmax=max(np.nanmax(pol), 1e-9) * 1.35)
    for (_, _), line in nullclines.groupby(["component", "polyline_id"]):
        ax.plot(line["x1"], line["x2"], "k-", lw=1.0)
    lim = recipe.options.get("extent", 1.5)
    diag = np.linspace(-lim, lim, 2)
    ax.plot(diag, -diag, color="0.55", lw=1.0)
    for _, row in fps.iterrows():
        if row["class_full"] == "stable":
            ax.plot(row["x1"], row["x2"], "o", mfc="k", mec="k", ms=7)
        else:
            ax.plot(row["x1"], row["x2"], "o", mfc="white", mec="k", ms=7)
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_xlabel("$x_1$")
    ax.set_ylabel("$x_2$")
    ax.set_title(recipe.options.get("title", "phase portrait"))
    ax.set_aspect("equal")
    fig.tight_layout()
    return _save(fig, recipe.out_path)


_RENDERERS = {
    "influence": _render_influence,
    "trajectory": _render_trajectory,
    "continuation": _render_continuation,
    "heatmap": _render_heatmap,
    "portrait": _render_portrait,
}


def render(recipe: FigureRecipe) -> list[str]:
    """Render one figure; returns the written image paths (PNG and PDF)."""
    return _RENDERERS[recipe.kind](recipe)
