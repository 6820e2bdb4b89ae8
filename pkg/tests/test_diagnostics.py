"""Tests for the Monte Carlo diagnostics: cone masses, ζ, ϱ, bounds, processes."""

import math

import numpy as np
import pytest

from maxlin.core.model import DimensionError, ParamBlocks, assign_cones
from maxlin.theory.diagnostics import (
    SQRT_PI_OVER_32, MassBounds, build_theory_report, candidate_directions, empirical_Q,
    empirical_U, empirical_V, error_bound_rhs, gaussian_chunks, mass_bounds, mc_cone_probabilities,
    mc_cone_probability, mc_inf_abs_expectation, mc_region_moments, mc_setdiff_probabilities,
    mc_sup_pos_expectation, mc_symdiff_probability, random_directions, sample_complexity_threshold,
    varrho_lower_bound, varrho_mc, zeta,
)
from maxlin.theory.planar import circle_directions, varrho_2d

HALF_NORMAL_MEAN = math.sqrt(2.0 / math.pi)


def make_half_spaces() -> ParamBlocks:
    return ParamBlocks.from_blocks([[1.0, 0.0], [-1.0, 0.0]])


def make_swapped() -> ParamBlocks:
    return ParamBlocks.from_blocks([[-1.0, 0.0], [1.0, 0.0]])


# ── Sampling helpers ─────────────────────────────────────────


def test_chunks_cover_all_draws():
    shapes = [G.shape for G in gaussian_chunks(3, 10, seed=1, chunk_size=4)]
    assert shapes == [(4, 3), (4, 3), (2, 3)]


def test_chunks_are_reproducible():
    a = np.vstack(list(gaussian_chunks(2, 100, seed=5, chunk_size=30)))
    b = np.vstack(list(gaussian_chunks(2, 100, seed=5, chunk_size=30)))
    np.testing.assert_array_equal(a, b)


def test_chunks_reject_empty_draw():
    with pytest.raises(ValueError):
        next(gaussian_chunks(2, 0, seed=1))


def test_random_directions_are_unit():
    W = random_directions(4, 50, seed=2)
    assert W.shape == (50, 4)
    np.testing.assert_allclose(np.linalg.norm(W, axis=1), 1.0)
    assert random_directions(3, 0, seed=2).shape == (0, 3)


def test_candidate_directions_include_facet_normals():
    V = candidate_directions(make_half_spaces())
    np.testing.assert_allclose(np.linalg.norm(V, axis=1), 1.0)
    for target in ([1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]):
        assert np.any(np.all(np.isclose(V, target), axis=1))


# ── Cone masses ──────────────────────────────────────────────


def test_half_space_cone_probability():
    est = mc_cone_probability(make_half_spaces(), 0, N=100_000, seed=3)
    assert est.value == pytest.approx(0.5, abs=4 * est.std_error)
    assert est.std_error == pytest.approx(math.sqrt(0.25 / 100_000), rel=1e-2)


def test_single_component_has_full_mass():
    est = mc_cone_probabilities(ParamBlocks.from_blocks([[0.3, -0.2, 1.0]]), N=1000, seed=0)
    assert len(est) == 1
    assert est[0].value == 1.0
    assert est[0].std_error == 0.0


def test_cone_probabilities_sum_to_one():
    beta = ParamBlocks(np.random.default_rng(4).normal(size=12), 4, 3)
    assert sum(e.value for e in mc_cone_probabilities(beta, N=5000, seed=4)) == pytest.approx(1.0)


def test_cone_index_out_of_range():
    with pytest.raises(IndexError):
        mc_cone_probability(make_half_spaces(), 2, N=10, seed=0)


def test_symdiff_vanishes_for_identical_blocks():
    beta = make_half_spaces()
    assert mc_symdiff_probability(beta, beta, 0, N=2000, seed=1).value == 0.0


def test_symdiff_is_total_for_swapped_blocks():
    est = mc_symdiff_probability(make_half_spaces(), make_swapped(), 1, N=2000, seed=1)
    assert est.value == pytest.approx(1.0)


def test_setdiff_masses_for_swapped_blocks():
    added, removed = mc_setdiff_probabilities(make_half_spaces(), make_swapped(), N=50_000, seed=6)
    for est in added + removed:
        assert est.value == pytest.approx(0.5, abs=4 * est.std_error + 1e-12)


def test_mismatched_pair_rejected():
    with pytest.raises(DimensionError):
        mc_symdiff_probability(make_half_spaces(), ParamBlocks.zeros(3, 2), 0, N=10, seed=0)


# ── ζ and analytic bounds ────────────────────────────────────


def test_zeta_half_spaces_without_mismatch():
    beta = make_half_spaces()
    est = zeta(beta, beta, N=100_000, seed=7)
    assert est.value == pytest.approx(SQRT_PI_OVER_32 * 0.25, abs=4 * est.std_error)
    assert est.value == pytest.approx(0.07833, abs=2e-3)


def test_zeta_single_component():
    beta = ParamBlocks.from_blocks([[1.0, 2.0]])
    est = zeta(beta, beta, N=1000, seed=0)
    assert est.value == pytest.approx(0.31333, abs=1e-5)
    assert est.std_error == 0.0


def test_zeta_negative_for_swapped_blocks():
    assert zeta(make_half_spaces(), make_swapped(), N=5000, seed=2).value < 0


def test_mass_bounds_edges():
    assert mass_bounds(0.0) == MassBounds(0.0, 0.0, 0.0)
    full = mass_bounds(1.0)
    assert full.inf_lower == pytest.approx(0.31333, abs=1e-5)
    assert full.sup_upper == 1.0
    assert full.sup_upper_tight == pytest.approx(math.sqrt(0.5))


@pytest.mark.parametrize("prob", [-0.1, 1.5])
def test_mass_bounds_reject_out_of_range(prob):
    with pytest.raises(ValueError):
        mass_bounds(prob)


def test_varrho_lower_bound_without_mismatch():
    assert varrho_lower_bound([0.5, 0.5], [0.0, 0.0], [0.0, 0.0]) == pytest.approx(0.07833, abs=1e-5)


def test_varrho_lower_bound_with_mismatch():
    value = varrho_lower_bound([0.5, 0.5], [0.04, 0.01], [0.0, 0.09])
    assert value == pytest.approx(SQRT_PI_OVER_32 * 0.25 - 0.2 - 0.3)


# ── Direction searches ───────────────────────────────────────


def test_region_moments_over_whole_plane():
    moments = mc_region_moments(lambda G: np.ones(G.shape[0], dtype=bool), 2,
                                circle_directions(8), N=50_000, seed=8)
    assert moments.probability.value == 1.0
    np.testing.assert_allclose(moments.abs_mean, HALF_NORMAL_MEAN, atol=5 * moments.abs_se.max())
    np.testing.assert_allclose(moments.pos_mean, HALF_NORMAL_MEAN / 2, atol=5 * moments.pos_se.max())


def test_region_moments_dimension_check():
    with pytest.raises(DimensionError):
        mc_region_moments(lambda G: G[:, 0] > 0, 3, circle_directions(4), N=10, seed=0)


def test_random_cones_respect_mass_bounds():
    """Direction-search estimates sit inside the analytic envelope."""
    rng = np.random.default_rng(10)
    for p in (2, 3, 5):
        beta = ParamBlocks(rng.normal(size=3 * p), 3, p)
        W = np.vstack([random_directions(p, 64, seed=p), candidate_directions(beta)])
        for j in range(beta.k):
            moments = mc_region_moments(lambda G, j=j: assign_cones(G, beta) == j, p, W,
                                        N=20_000, seed=p)
            bounds = mass_bounds(moments.probability.value)
            inf_est = mc_inf_abs_expectation(moments)
            sup_est = mc_sup_pos_expectation(moments)
            assert inf_est.approximate and sup_est.approximate
            assert inf_est.value >= bounds.inf_lower - 4 * inf_est.std_error
            assert sup_est.value <= bounds.sup_upper + 4 * sup_est.std_error


def test_varrho_single_component():
    beta = ParamBlocks.from_blocks([[1.0, 0.0]])
    est = varrho_mc(beta, beta, N_g=100_000, M_w=16, seed=11)
    assert est.approximate
    assert est.directions > 16
    assert est.value == pytest.approx(HALF_NORMAL_MEAN, abs=0.02)


def test_varrho_decreases_with_mismatch():
    beta = make_half_spaces()
    tilted = ParamBlocks.from_blocks([[1.0, 0.3], [-1.0, 0.0]])
    W = circle_directions(90)
    clean = varrho_mc(beta, beta, N_g=40_000, M_w=1, seed=3, directions=W)
    noisy = varrho_mc(beta, tilted, N_g=40_000, M_w=1, seed=3, directions=W)
    assert noisy.value < clean.value


@pytest.mark.parametrize("tilt", [0.0, 0.3])
def test_varrho_matches_planar_closed_form(tilt):
    """Half-planes against a copy rotated by ``tilt``: both mismatch wedges have width tilt."""
    beta = make_half_spaces()
    rotated = ParamBlocks.from_blocks([[math.cos(tilt), math.sin(tilt)],
                                       [-math.cos(tilt), -math.sin(tilt)]])
    est = varrho_mc(beta, rotated, N_g=100_000, M_w=1, seed=17, directions=circle_directions(360))
    expected = varrho_2d([math.pi, math.pi], [(tilt, tilt), (tilt, tilt)])
    assert expected.assumption_holds
    assert est.value == pytest.approx(expected.value, abs=4 * est.std_error + 2e-3)


def test_varrho_rejects_bad_counts():
    beta = make_half_spaces()
    with pytest.raises(ValueError):
        varrho_mc(beta, beta, N_g=0, M_w=4, seed=0)


# ── Empirical processes ──────────────────────────────────────


X_SMALL = np.array([[1.0, 0.0], [-2.0, 3.0]])
Z_SMALL = ParamBlocks.from_blocks([[1.0, 1.0], [0.0, 2.0]])


def test_empirical_V():
    assert empirical_V(X_SMALL, make_half_spaces(), Z_SMALL) == pytest.approx(3.5)


def test_empirical_U_drops_negative_terms():
    z = ParamBlocks.from_blocks([[-1.0, 1.0], [0.0, 2.0]])
    assert empirical_V(X_SMALL, make_half_spaces(), z) == pytest.approx(3.5)
    assert empirical_U(X_SMALL, make_half_spaces(), z) == pytest.approx(3.0)


def test_empirical_Q():
    beta = make_half_spaces()
    assert empirical_Q(X_SMALL, beta, beta, Z_SMALL) == 0.0
    assert empirical_Q(X_SMALL, beta, make_swapped(), Z_SMALL) == pytest.approx(-3.0)


def test_empirical_V_union_indicator():
    assert empirical_V(X_SMALL, make_half_spaces(), Z_SMALL, beta_tilde=make_swapped()) == pytest.approx(4.0)
    assert empirical_V(X_SMALL, make_half_spaces(), Z_SMALL, beta_tilde=make_half_spaces()) == pytest.approx(3.5)


@pytest.mark.parametrize("seed", range(5))
def test_empirical_Q_bounded_by_union_V(seed):
    rng = np.random.default_rng(seed)
    k, p = 3, 4
    beta_star = ParamBlocks(rng.normal(size=k * p), k, p)
    beta_tilde = beta_star + 0.5 * ParamBlocks(rng.normal(size=k * p), k, p)
    z = ParamBlocks(rng.normal(size=k * p), k, p)
    X = rng.normal(size=(200, p))
    q = empirical_Q(X, beta_star, beta_tilde, z)
    assert abs(q) <= empirical_V(X, beta_star, z, beta_tilde=beta_tilde) + 1e-12
    assert empirical_Q(X, beta_star, beta_star, z) == 0.0


def test_empirical_process_shape_check():
    with pytest.raises(DimensionError):
        empirical_V(X_SMALL, make_half_spaces(), ParamBlocks.zeros(3, 2))


# ── Sample complexity and error bound ────────────────────────


def test_sample_complexity_floors_logs():
    assert sample_complexity_threshold(1, 1, math.exp(-1), 1.0) == 8


def test_sample_complexity_scales_with_zeta():
    base = sample_complexity_threshold(10, 3, 0.05, 0.1)
    assert sample_complexity_threshold(10, 3, 0.05, 0.05) >= 4 * base - 4


@pytest.mark.parametrize("kwargs", [
    dict(p=3, k=2, delta=0.05, zeta=0.0),
    dict(p=3, k=2, delta=1.0, zeta=0.1),
    dict(p=3, k=2, delta=0.05, zeta=0.1, c=-1.0),
])
def test_sample_complexity_validation(kwargs):
    with pytest.raises(ValueError):
        sample_complexity_threshold(**kwargs)


def test_error_bound_rhs():
    assert error_bound_rhs(0.1, [1.0, -1.0, 2.0, 0.0]) == pytest.approx(20.0)


def test_error_bound_rhs_validation():
    with pytest.raises(ValueError):
        error_bound_rhs(0.0, [1.0])
    with pytest.raises(ValueError):
        error_bound_rhs(0.1, [])


# ── Report ───────────────────────────────────────────────────


def test_report_for_matching_pair():
    beta = make_half_spaces()
    report = build_theory_report(beta, beta, samples=20_000, seed=1, directions=8)
    assert report.pi_min == pytest.approx(0.5, abs=0.02)
    assert report.zeta_hat.value > 0
    assert isinstance(report.sample_complexity, int)
    assert report.varrho_hat is not None
    assert len(report.mass_bounds) == 2

    summary = report.to_dict()
    assert summary["k"] == 2 and summary["p"] == 2
    assert len(summary["cone_probabilities"]) == 2
    assert set(summary["mass_bounds"][0]) == {"inf_lower", "sup_upper", "sup_upper_tight"}
    assert summary["varrho_hat"]["approximate"] is True


def test_report_without_guarantee():
    report = build_theory_report(make_half_spaces(), make_swapped(), samples=5000, seed=2)
    assert report.zeta_hat.value < 0
    assert report.sample_complexity is None
    assert report.varrho_hat is None
    assert report.to_dict()["varrho_hat"] is None
