"""
SVG figures for the CLI report path.

Rendering goes through the Agg-free SVG backend with a fixed hash salt and
no date stamp, so the numeric payload of a figure is stable across runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("svg", force=False)
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "svg.hashsalt": "dualppln",
    "svg.fonttype": "none",
    "axes.grid": True,
    "figure.autolayout": True,
    "font.size": 10.0,
    "legend.fontsize": "small",
}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path


def line_plot(path, x, series, xlabel, ylabel, title=None, styles=None):
    """One or more curves sharing an x axis. ``series`` maps label -> y."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for k, (label, y) in enumerate(series.items()):
            xs = x[label] if isinstance(x, dict) else x
            kw = styles[k] if styles else {}
            ax.plot(xs, y, label=label, lw=1.2, **kw)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend()
        return _save(fig, path)


def heatmap(path, x, y, values, xlabel, ylabel, cbar_label, locus=None, marker=None):
    """Map of ``values[j, i]`` over (x[i], y[j]) with an optional zero locus."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        vals = np.ma.masked_invalid(values)
        lim = float(np.nanmax(np.abs(values))) if np.isfinite(values).any() else 1.0
        mesh = ax.pcolormesh(x, y, vals, cmap="coolwarm", vmin=-lim, vmax=lim, shading="auto", rasterized=True)
        fig.colorbar(mesh, ax=ax, label=cbar_label)
        if locus:
            lx, ly = zip(*locus)
            ax.plot(lx, ly, "w--", lw=1.2)
        if marker is not None:
            ax.plot([marker[0]], [marker[1]], "k+", ms=9)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(False)
        return _save(fig, path)
