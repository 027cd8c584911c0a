"""Deterministic SVG plots: interval comparisons, box plots, recall matrix."""
from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402
from matplotlib.path import Path as MplPath  # noqa: E402

from .evaluation import Cell, MetricRow, quartiles  # noqa: E402
from .intervals import Interval, length  # noqa: E402

SERIES_COLORS = {"truth": "tab:blue", "with doc.": "tab:green", "standalone": "tab:red"}
CELL_COLORS = {Cell.PROVIDED: "#4c72b0", Cell.MISSED: "#c44e52", Cell.NOT_TRUTHED: "#55a868"}
# bow-tie outline; stands in for intervals too short to see as a bar
HOURGLASS = MplPath([(-1, 1), (1, 1), (-1, -1), (1, -1), (-1, 1)],
                    [MplPath.MOVETO, MplPath.LINETO, MplPath.LINETO, MplPath.LINETO, MplPath.CLOSEPOLY])
SMALL_INTERVAL_FRACTION = 0.01

_RC = {
    "svg.hashsalt": "compextract",
    "svg.fonttype": "path",
    "path.simplify": False,
    "font.family": "DejaVu Sans",
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None}, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_intervals(series: Mapping[str, Mapping[str, Interval]], path, title: str = "",
                   ylabel: str = "weight") -> Path:
    """One column per x label (sample id or compound), one bar per series.

    ``series`` maps a series name ("truth", "with doc.", "standalone") to
    {x label: interval}. Intervals shorter than 1% of the y span are drawn as
    an hourglass marker.
    """
    xs = sorted({x for s in series.values() for x in s})
    if not xs:
        raise ValueError("nothing to plot")
    all_iv = [iv for s in series.values() for iv in s.values()]
    span = max(iv.hi for iv in all_iv) - min(iv.lo for iv in all_iv) or 1.0
    names = list(series)
    width = 0.8 / max(len(names), 1)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(max(4, 0.9 * len(xs) + 2), 4))
        for k, name in enumerate(names):
            color = SERIES_COLORS.get(name, f"C{k}")
            for i, x in enumerate(xs):
                iv = series[name].get(x)
                if iv is None:
                    continue
                cx = i - 0.4 + width * (k + 0.5)
                if length(iv) < SMALL_INTERVAL_FRACTION * span:
                    ax.plot([cx], [(iv.lo + iv.hi) / 2], marker=HOURGLASS, markersize=9,
                            color=color, linestyle="none")
                else:
                    ax.bar(cx, length(iv), width=width * 0.8, bottom=iv.lo, color=color, alpha=0.75)
        ax.set_xticks(range(len(xs)))
        ax.set_xticklabels(xs, rotation=45, ha="right")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend(handles=[Patch(color=SERIES_COLORS.get(n, f"C{k}"), label=n) for k, n in enumerate(names)],
                  loc="best", fontsize="small")
        return _save(fig, path)


def plot_box(rows: Sequence[MetricRow], path, metric: str = "precision", by: str = "sample") -> Path:
    groups: Dict[str, List[float]] = {}
    for r in rows:
        v = getattr(r, metric)
        if v is None:
            continue
        g = r.sample_id if by == "sample" else r.compound
        groups.setdefault(g, []).append(float(v))
    if not groups:
        raise ValueError("nothing to plot")
    labels = sorted(groups)
    data = [groups[g] for g in labels]
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(max(4, 0.7 * len(labels) + 2), 4))
        # whiskers at 1.5 IQR match the outlier rule used in the summaries
        stats = []
        for g, vals in zip(labels, data):
            q1, med, q3 = quartiles(vals)
            iqr = q3 - q1
            inside = [v for v in vals if q1 - 1.5 * iqr <= v <= q3 + 1.5 * iqr]
            stats.append({"label": g, "q1": q1, "med": med, "q3": q3,
                          "whislo": min(inside), "whishi": max(inside),
                          "fliers": [v for v in vals if v not in inside]})
        ax.bxp(stats, showfliers=False)
        for i, vals in enumerate(data, start=1):
            ax.plot([i] * len(vals), vals, "o", color="tab:orange", markersize=4, alpha=0.8)
        ax.set_ylabel(metric)
        ax.set_xlabel("sample id" if by == "sample" else "compound")
        plt.setp(ax.get_xticklabels(), rotation=45, ha="right")
        return _save(fig, path)


def plot_matrix(cells: Mapping[Tuple[str, str], Cell], path) -> Path:
    if not cells:
        raise ValueError("nothing to plot")
    compounds = sorted({c for c, _ in cells})
    samples = sorted({s for _, s in cells})
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(0.6 * len(samples) + 2, 0.35 * len(compounds) + 1.5))
        for (c, s), state in sorted(cells.items()):
            ax.add_patch(plt.Rectangle((samples.index(s), compounds.index(c)), 1, 1,
                                       facecolor=CELL_COLORS[state], edgecolor="white"))
        ax.set_xlim(0, len(samples))
        ax.set_ylim(0, len(compounds))
        ax.set_xticks([i + 0.5 for i in range(len(samples))])
        ax.set_xticklabels(samples, rotation=45, ha="right")
        ax.set_yticks([i + 0.5 for i in range(len(compounds))])
        ax.set_yticklabels(compounds)
        ax.legend(handles=[Patch(color=v, label=k.value) for k, v in CELL_COLORS.items()],
                  bbox_to_anchor=(1.02, 1), loc="upper left", fontsize="small")
        return _save(fig, path)
