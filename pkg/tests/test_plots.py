"""Tests for the SVG heatmap and noise-sweep figures."""

import math

import pandas as pd
import pytest

from maxlin.experiments.plots import (
    LOG_MAX, LOG_MIN, SENTINEL_COLOR, clipped_log_error, color_value, render_heatmap,
    render_noise_sweep,
)
from maxlin.utils.io import GRID_COLUMNS, write_grid_csv


def make_frame(cells, mode="fix_k_vary_p", method="ce") -> pd.DataFrame:
    """cells: {(column value, n): median error}."""
    axis = {"fix_k_vary_p": "p", "fix_p_vary_k": "k", "noise_sweep": "sigma"}[mode]
    rows = []
    for (col, n), median in cells.items():
        row = dict(mode=mode, k=3, p=10, n=n, sigma=0.0, method=method, trials=5,
                   median_error=median, finite_trials=5)
        row[axis] = col
        rows.append(row)
    return pd.DataFrame(rows, columns=GRID_COLUMNS)


def make_sweep_frame() -> pd.DataFrame:
    rows = []
    for sigma in (0.0, 0.1):
        for method in ("ce", "lspa"):
            for n, median in ((100, 0.1), (200, 0.01), (400, math.inf)):
                rows.append(dict(mode="noise_sweep", k=5, p=10, n=n, sigma=sigma, method=method,
                                 trials=5, median_error=median, finite_trials=5))
    return pd.DataFrame(rows, columns=GRID_COLUMNS)


# ── Colors ───────────────────────────────────────────────────


@pytest.mark.parametrize("median, expected", [
    (0.0, LOG_MIN),
    (1e-9, LOG_MIN),
    (1e-3, -3.0),
    (1e3, LOG_MAX),
])
def test_clipped_log_error(median, expected):
    assert clipped_log_error(median) == pytest.approx(expected)


def test_sentinel_color_is_reserved():
    from matplotlib.colors import to_rgba
    assert color_value(math.inf) == to_rgba(SENTINEL_COLOR)
    assert color_value(1e-3) != to_rgba(SENTINEL_COLOR)


def test_color_brightens_with_error():
    """viridis runs dark to light, so luminance rises with log error."""
    def luminance(rgba):
        r, g, b, _ = rgba
        return 0.2126 * r + 0.7152 * g + 0.0722 * b
    values = [luminance(color_value(10.0 ** e)) for e in range(-6, 2)]
    assert values == sorted(values)


# ── Heatmap ──────────────────────────────────────────────────


def test_heatmap_draws_one_cell_per_grid_point(tmp_path):
    frame = make_frame({(4, 50): 0.3, (4, 100): 1e-7, (8, 50): 0.5, (8, 100): 0.2})
    svg = render_heatmap(frame, tmp_path / "heat.svg").read_text()
    assert svg.count('id="cell-') == 4
    assert 'id="phase-boundary"' in svg


def test_heatmap_without_boundary(tmp_path):
    frame = make_frame({(4, 50): math.inf, (4, 100): math.inf})
    svg = render_heatmap(frame, tmp_path / "heat.svg").read_text()
    assert svg.count('id="cell-') == 2
    assert "phase-boundary" not in svg


def test_heatmap_from_csv(tmp_path):
    path = write_grid_csv(make_frame({(2, 25): 1e-8}, mode="fix_p_vary_k"), tmp_path / "grid.csv")
    out = render_heatmap(path, tmp_path / "nested" / "heat.svg")
    assert out.exists()
    assert out.read_text().lstrip().startswith("<?xml")


def test_heatmap_is_byte_stable(tmp_path):
    frame = make_frame({(4, 50): 0.3, (4, 100): 1e-7})
    a = render_heatmap(frame, tmp_path / "a.svg").read_bytes()
    b = render_heatmap(frame, tmp_path / "b.svg").read_bytes()
    assert a == b


def test_heatmap_rejects_empty_grid(tmp_path):
    with pytest.raises(ValueError):
        render_heatmap(pd.DataFrame(columns=GRID_COLUMNS), tmp_path / "heat.svg")


def test_heatmap_rejects_missing_method(tmp_path):
    with pytest.raises(ValueError):
        render_heatmap(make_frame({(4, 50): 0.3}), tmp_path / "heat.svg", method="lspa")


# ── Noise sweep ──────────────────────────────────────────────


def test_noise_sweep_has_one_curve_per_method_and_panel(tmp_path):
    svg = render_noise_sweep(make_sweep_frame(), tmp_path / "sweep.svg").read_text()
    for s in (0, 1):
        for method in ("ce", "lspa"):
            assert f'id="curve-{method}-{s}"' in svg


def test_noise_sweep_rejects_empty_grid(tmp_path):
    with pytest.raises(ValueError):
        render_noise_sweep(pd.DataFrame(columns=GRID_COLUMNS), tmp_path / "sweep.svg")
