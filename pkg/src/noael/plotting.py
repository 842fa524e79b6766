"""Raw-data and p-value figures written as deterministic SVG files."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .datamodel import IncidenceDataset  # noqa: E402

_RC = {
    "svg.hashsalt": "noael",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)


def plot_dataset(ds, path, title: str = "", ylabel: str = "response"):
    """Boxplots per dose group, or a mosaic of crude tumor proportions.

    Returns the number of groups drawn.
    """
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(3.2, 3.0))
        if isinstance(ds, IncidenceDataset):
            drawn = _mosaic(ax, ds)
        else:
            data = [list(o) for o in ds.observations]
            drawn = len(ax.boxplot(data, tick_labels=ds.labels, widths=0.6,
                       medianprops={"color": "black"},
                       flierprops={"marker": "o", "markersize": 3})["boxes"])
            ax.set_ylabel(ylabel)
            ax.set_xlabel("dose")
        if title:
            ax.set_title(title)
        _save(fig, path)
    return drawn


def _mosaic(ax, ds: IncidenceDataset):
    n_total = ds.n_total
    x = 0.0
    for g, animals in zip(ds.groups, ds.animals):
        w = len(animals) / n_total
        p = sum(a.status for a in animals) / len(animals)
        ax.add_patch(Rectangle((x, 0), w * 0.97, p, facecolor="0.35", edgecolor="black"))
        ax.add_patch(Rectangle((x, p), w * 0.97, 1 - p, facecolor="0.9", edgecolor="black"))
        ax.text(x + w * 0.485, -0.06, g.label, ha="center", va="top")
        x += w
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xticks([])
    ax.set_ylabel("tumor proportion (dark)")
    ax.set_xlabel("dose (width ~ group size)", labelpad=14)
    return len(ds.groups)


def plot_pvalues(report, path, title: str = ""):
    """Raw and adjusted p-values per comparison on a log scale, with alpha."""
    rows = report.rows
    alpha = report.decision["alpha"]
    floor = 1e-16
    xs = list(range(len(rows)))
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(3.6, 3.0))
        ax.plot(xs, [max(r.raw_p, floor) for r in rows], "o--", color="0.5", label="raw")
        ax.plot(xs, [max(r.adjusted_p, floor) for r in rows], "s-", color="black", label="adjusted")
        ax.axhline(alpha, color="tab:red", lw=0.8, ls=":", label=f"alpha={alpha:g}")
        ax.set_yscale("log")
        ax.set_xticks(xs)
        ax.set_xticklabels([r.comparison for r in rows])
        for lbl, r in zip(ax.get_xticklabels(), rows):
            if r.dose == report.decision["noael"]:
                lbl.set_fontweight("bold")
        lo = min(max(r.adjusted_p, floor) for r in rows)
        ax.set_ylim(10 ** math.floor(math.log10(min(lo, alpha)) - 0.5), 1.5)
        ax.set_ylabel("p-value")
        ax.legend(frameon=False, fontsize=7)
        ax.set_title(title or f"NOAEL: {report.decision['noael']}")
        _save(fig, path)
