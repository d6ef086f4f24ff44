"""Figure rendering (matplotlib, Agg). SVG text is kept as text so labels
stay searchable in the output."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.colors import Normalize  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402
import numpy as np  # noqa: E402

from .features import FEATURE_SETS  # noqa: E402

DIVERGING = "RdBu_r"  # red positive, blue negative

STYLE = {
    "font.family": "sans-serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "svg.fonttype": "none",
    "svg.hashsalt": "perfexpect",
}

def _save(fig, path):
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        raise OSError(f"cannot write {path}: no such directory")
    fmt = os.path.splitext(path)[1].lstrip(".") or "svg"
    metadata = {"Date": None} if fmt == "svg" else None
    fig.savefig(path, format=fmt, metadata=metadata, bbox_inches="tight")
    plt.close(fig)


def cell_color(value, vmax):
    """RGBA of one map cell under the symmetric diverging scale."""
    norm = Normalize(-vmax, vmax) if vmax > 0 else Normalize(-1.0, 1.0)
    return plt.get_cmap(DIVERGING)(norm(value))


def render_map(smap, path, title=None):
    """Heat map with one labelled row per feature and columns at offsets -W..W.

    Every cell is a rectangle with id ``cell-<row>-<col>``; the colour scale
    is symmetric about zero with its limit at max |value|.
    """
    values = np.asarray(smap.values, dtype=float)
    n_feat, width = values.shape
    W = smap.half_window
    vmax = float(np.abs(values).max())
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(0.28 * width + 2.0, 0.3 * n_feat + 1.2))
        for r in range(n_feat):
            for c in range(width):
                ax.add_patch(Rectangle((c - 0.5, r - 0.5), 1, 1, linewidth=0,
                                       facecolor=cell_color(values[r, c], vmax),
                                       gid=f"cell-{r}-{c}"))
        ax.add_patch(Rectangle((W - 0.5, -0.5), 1, n_feat, fill=False, edgecolor="k",
                               linewidth=0.8, gid="tau-marker"))
        ax.set_xlim(-0.5, width - 0.5)
        ax.set_ylim(n_feat - 0.5, -0.5)
        ax.set_yticks(range(n_feat))
        ax.set_yticklabels([str(n) for n in smap.feature_names])
        ticks = list(range(0, width, max(1, width // 8)))
        if W not in ticks:
            ticks.append(W)
        ticks.sort()
        ax.set_xticks(ticks)
        ax.set_xticklabels(["τ" if t == W else f"{t - W:+d}" for t in ticks])
        ax.set_xlabel("time offset (onsets)")
        mappable = plt.cm.ScalarMappable(norm=Normalize(-vmax or -1.0, vmax or 1.0),
                                         cmap=DIVERGING)
        fig.colorbar(mappable, ax=ax, fraction=0.04, pad=0.02)
        if title:
            ax.set_title(title)
        _save(fig, path)
    return path


def render_r2_summary(reports, path, target=None):
    """Per-piece R^2 of each feature set as a strip plot with the mean marked."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.6))
        names = [fs for fs in FEATURE_SETS if fs in reports]
        for x, fs in enumerate(names):
            vals = np.asarray(reports[fs].r2_values)
            jitter = np.linspace(-0.15, 0.15, len(vals)) if len(vals) > 1 else np.zeros(1)
            ax.plot(x + jitter, vals, "o", ms=3, color="0.55", zorder=1)
            ax.plot([x - 0.25, x + 0.25], [np.mean(vals)] * 2, color="C3", lw=2, zorder=2)
        ax.axhline(0, color="0.8", lw=0.6, zorder=0)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names)
        ax.set_ylabel("$R^2$ per piece")
        if target:
            ax.set_title(target.upper().replace("_D", "$_d$"))
        _save(fig, path)
    return path
