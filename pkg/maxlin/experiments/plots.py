"""
SVG figures for grid results.

- render_heatmap: one cell per (column value, n), colored by the clipped
  log10 median error, with the recovery boundary overlaid in green
- render_noise_sweep: log10 median error vs n, one panel per sigma,
  solid for CE and dotted for LSPA

SVGs embed glyphs as paths and use a fixed hash salt so identical grids
give identical files.
"""

import logging
import math
from pathlib import Path
from typing import Tuple, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from matplotlib.cm import ScalarMappable  # noqa: E402
from matplotlib.colors import Normalize, to_rgba  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from maxlin.experiments.grid import column_axis, phase_boundary  # noqa: E402
from maxlin.utils.io import read_grid_csv  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams["svg.hashsalt"] = "maxlin"
plt.rcParams["svg.fonttype"] = "path"

LOG_MIN, LOG_MAX = -6.0, 1.0
SENTINEL_COLOR = "#9e9e9e"
BOUNDARY_COLOR = "green"
CMAP = "viridis"

_AXIS_LABELS = {"p": "p", "k": "k", "sigma": "σ"}
_LINE_STYLES = {"ce": "-", "lspa": ":"}

GridLike = Union[str, Path, pd.DataFrame]


def _frame(grid: GridLike) -> pd.DataFrame:
    return grid if isinstance(grid, pd.DataFrame) else read_grid_csv(grid)


def clipped_log_error(median: float) -> float:
    """log10(median) clipped to [LOG_MIN, LOG_MAX]; zero maps to LOG_MIN."""
    if median <= 0:
        return LOG_MIN
    return float(np.clip(math.log10(median), LOG_MIN, LOG_MAX))


def color_value(median: float) -> Tuple[float, float, float, float]:
    """RGBA of a cell; the sentinel gets the reserved color."""
    if not math.isfinite(median):
        return to_rgba(SENTINEL_COLOR)
    norm = Normalize(LOG_MIN, LOG_MAX)
    return tuple(matplotlib.colormaps[CMAP](norm(clipped_log_error(median))))


def _save(fig, out: Union[str, Path]) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out


def render_heatmap(grid: GridLike, out_svg: Union[str, Path], method: str = "ce",
                   threshold: float = 1e-5) -> Path:
    """Phase-transition heatmap of one method's median errors.

    Args:
        grid: Grid CSV path or DataFrame.
        out_svg: Output path.
        method: Method whose medians are drawn.
        threshold: Recovery threshold for the boundary line.

    Returns:
        Path of the written SVG.
    """
    frame = _frame(grid)
    if frame.empty:
        raise ValueError("grid is empty")
    axis = column_axis(frame)
    frame = frame[frame["method"] == method]
    if frame.empty:
        raise ValueError(f"grid has no rows for method {method!r}")

    n_values = sorted(frame["n"].unique())
    col_values = sorted(frame[axis].unique())
    x_of = {n: i for i, n in enumerate(n_values)}
    y_of = {v: j for j, v in enumerate(col_values)}

    fig, ax = plt.subplots(figsize=(1.0 + 0.6 * len(n_values), 1.0 + 0.5 * len(col_values)))
    for row in frame.itertuples(index=False):
        i, j = y_of[getattr(row, axis)], x_of[row.n]
        ax.add_patch(Rectangle((j, i), 1.0, 1.0, facecolor=color_value(row.median_error),
                               edgecolor="white", linewidth=0.5, gid=f"cell-{i}-{j}"))

    boundaries = phase_boundary(frame, threshold, method)
    xs, ys = [], []
    for value in col_values:
        key = value.item() if hasattr(value, "item") else value
        n = boundaries.get(key)
        j = y_of[value]
        if n is None:
            xs.extend([np.nan, np.nan])
        else:
            xs.extend([x_of[n], x_of[n]])
        ys.extend([j, j + 1])
    if any(b is not None for b in boundaries.values()):
        ax.plot(xs, ys, color=BOUNDARY_COLOR, linewidth=2.0, gid="phase-boundary")
    else:
        logger.info("No recovery boundary below %.0e for %s", threshold, method)

    ax.set_xlim(0, len(n_values))
    ax.set_ylim(0, len(col_values))
    ax.set_xticks(np.arange(len(n_values)) + 0.5)
    ax.set_xticklabels([str(int(n)) for n in n_values])
    ax.set_yticks(np.arange(len(col_values)) + 0.5)
    ax.set_yticklabels([f"{v:g}" for v in col_values])
    ax.set_xlabel("n")
    ax.set_ylabel(_AXIS_LABELS[axis])
    ax.set_title(f"log10 median error ({method})")
    fig.colorbar(ScalarMappable(Normalize(LOG_MIN, LOG_MAX), cmap=CMAP), ax=ax)
    fig.tight_layout()
    return _save(fig, out_svg)


def render_noise_sweep(grid: GridLike, out_svg: Union[str, Path]) -> Path:
    """log10 median error vs n, one panel per sigma, every method in the grid."""
    frame = _frame(grid)
    if frame.empty:
        raise ValueError("grid is empty")
    sigmas = sorted(frame["sigma"].unique())
    fig, axes = plt.subplots(1, len(sigmas), figsize=(3.0 * len(sigmas), 3.0), sharey=True, squeeze=False)
    for s, (ax, sigma) in enumerate(zip(axes[0], sigmas)):
        panel = frame[frame["sigma"] == sigma]
        for method, curve in panel.groupby("method", sort=True):
            curve = curve.sort_values("n")
            errors = curve["median_error"].to_numpy(dtype=np.float64)
            logs = np.array([clipped_log_error(e) if np.isfinite(e) else np.nan for e in errors])
            ax.plot(curve["n"].to_numpy(), logs, linestyle=_LINE_STYLES.get(method, "--"),
                    marker="o", markersize=3, label=method, gid=f"curve-{method}-{s}")
        ax.set_title(f"σ = {sigma:g}")
        ax.set_xlabel("n")
    axes[0][0].set_ylabel("log10 median error")
    axes[0][-1].legend()
    fig.tight_layout()
    return _save(fig, out_svg)
