"""Tests for the planar closed forms, cross-checked against Monte Carlo."""

import math

import numpy as np
import pytest

from maxlin.core.model import ParamBlocks, assign_cones
from maxlin.theory.diagnostics import (
    mc_inf_abs_expectation, mc_region_moments, mc_sup_pos_expectation,
)
from maxlin.theory.planar import (
    RADIAL_MEAN, circle_directions, cone2d_inf_expectation, cone2d_sup_expectation, varrho_2d,
)


def make_wedge(width: float):
    """Membership test for the wedge of angles in [0, width)."""
    def region(G):
        angles = np.mod(np.arctan2(G[:, 1], G[:, 0]), 2.0 * np.pi)
        return angles < width
    return region


def wedge_directions(width: float) -> np.ndarray:
    """A fine circle grid plus the wedge edges and their normals."""
    edges = np.array([0.0, width, width / 2.0, math.pi / 2.0, width + math.pi / 2.0])
    extra = np.column_stack([np.cos(edges), np.sin(edges)])
    return np.vstack([circle_directions(720), extra, -extra])


# ── Closed forms ─────────────────────────────────────────────


def test_radial_mean():
    assert RADIAL_MEAN == pytest.approx(math.sqrt(math.pi / 2.0))


def test_half_plane_values_coincide():
    assert cone2d_inf_expectation(math.pi) == pytest.approx(0.39894, abs=1e-5)
    assert cone2d_sup_expectation(math.pi) == pytest.approx(0.39894, abs=1e-5)


def test_spot_values():
    assert cone2d_inf_expectation(math.pi / 2) == pytest.approx(0.11685, abs=1e-5)
    assert cone2d_sup_expectation(math.pi / 3) == pytest.approx(0.19947, abs=1e-5)


def test_empty_wedge():
    assert cone2d_inf_expectation(0.0) == 0.0
    assert cone2d_sup_expectation(0.0) == 0.0


@pytest.mark.parametrize("theta", [-0.1, math.pi + 0.01])
def test_width_outside_range(theta):
    with pytest.raises(ValueError):
        cone2d_inf_expectation(theta)
    with pytest.raises(ValueError):
        cone2d_sup_expectation(theta)


def test_closed_forms_are_monotone():
    widths = np.linspace(0.0, math.pi, 25)
    inf_vals = [cone2d_inf_expectation(w) for w in widths]
    sup_vals = [cone2d_sup_expectation(w) for w in widths]
    assert np.all(np.diff(inf_vals) > 0)
    assert np.all(np.diff(sup_vals) > 0)


# ── Monte Carlo agreement ────────────────────────────────────


@pytest.mark.parametrize("width", [math.pi / 6, math.pi / 4, math.pi / 3, math.pi / 2,
                                   2 * math.pi / 3, math.pi])
def test_closed_forms_match_monte_carlo(width):
    moments = mc_region_moments(make_wedge(width), 2, wedge_directions(width), N=200_000, seed=17)
    inf_est = mc_inf_abs_expectation(moments)
    sup_est = mc_sup_pos_expectation(moments)
    assert inf_est.value == pytest.approx(cone2d_inf_expectation(width), abs=3 * inf_est.std_error + 1e-3)
    assert sup_est.value == pytest.approx(cone2d_sup_expectation(width), abs=3 * sup_est.std_error + 1e-3)


def test_wedge_mass_matches_width():
    width = math.pi / 3
    moments = mc_region_moments(make_wedge(width), 2, circle_directions(4), N=100_000, seed=2)
    est = moments.probability
    assert est.value == pytest.approx(width / (2 * math.pi), abs=4 * est.std_error)


def test_quarter_plane_blocks_produce_quarter_cones():
    beta = ParamBlocks.from_blocks(circle_directions(4, offset=math.pi / 4))
    G = circle_directions(8, offset=math.pi / 8)
    np.testing.assert_array_equal(assign_cones(G, beta), [0, 0, 1, 1, 2, 2, 3, 3])


# ── Planar margin ────────────────────────────────────────────


def test_margin_without_mismatch():
    result = varrho_2d([math.pi / 2] * 4, [(0.0, 0.0)] * 4)
    assert result.value == pytest.approx(0.11685, abs=1e-5)
    assert result.assumption_holds


def test_margin_subtracts_both_mismatch_terms():
    a, b = 0.1, 0.2
    result = varrho_2d([math.pi, math.pi], [(a, 0.0), (0.0, b)])
    expected = cone2d_inf_expectation(math.pi) - cone2d_sup_expectation(a) - cone2d_sup_expectation(b)
    assert result.value == pytest.approx(expected)
    assert result.assumption_holds


def test_margin_flags_failed_mass_condition():
    result = varrho_2d([0.2, math.pi], [(0.3, 0.1), (0.0, 0.0)])
    assert not result.assumption_holds
    assert result.value < 0


def test_margin_validation():
    with pytest.raises(ValueError):
        varrho_2d([], [])
    with pytest.raises(ValueError):
        varrho_2d([math.pi], [(0.0, 0.0), (0.0, 0.0)])
    with pytest.raises(ValueError):
        varrho_2d([4.0], [(0.0, 0.0)])


# ── Direction grids ──────────────────────────────────────────


def test_circle_directions():
    W = circle_directions(4)
    np.testing.assert_allclose(W, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-15)
    np.testing.assert_allclose(np.linalg.norm(circle_directions(37, offset=0.3), axis=1), 1.0)
    with pytest.raises(ValueError):
        circle_directions(0)
