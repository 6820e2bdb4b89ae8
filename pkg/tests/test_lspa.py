"""Tests for the least-squares partition algorithm."""

import numpy as np
import pytest

from maxlin.config import SynthConfig
from maxlin.core.linalg import least_squares
from maxlin.core.model import DimensionError, ParamBlocks, evaluate, normalized_error
from maxlin.core.synth import make_instance
from maxlin.estimators.lspa import fit_lspa, lspa_step, partition, partition_sse


def make_noiseless(n=200, p=4, k=2, seed=9, **overrides):
    return make_instance(SynthConfig(n=n, p=p, k=k, sigma=0.0, seed=seed, **overrides))


# ── Partition ────────────────────────────────────────────────


def test_partition_half_spaces():
    beta = ParamBlocks.from_blocks([[1.0, 0.0], [-1.0, 0.0]])
    np.testing.assert_array_equal(partition(np.array([[1.0, 0.0], [-2.0, 3.0]]), beta), [0, 1])


def test_partition_single_component():
    X = np.random.default_rng(0).normal(size=(6, 3))
    np.testing.assert_array_equal(partition(X, ParamBlocks.zeros(1, 3)), 0)


def test_partition_identical_blocks_use_first():
    X = np.random.default_rng(1).normal(size=(6, 2))
    beta = ParamBlocks.from_blocks([[0.5, 0.5], [0.5, 0.5]])
    np.testing.assert_array_equal(partition(X, beta), 0)


def test_partition_dimension_mismatch():
    with pytest.raises(DimensionError):
        partition(np.ones((3, 2)), ParamBlocks.zeros(2, 3))


# ── Single step ──────────────────────────────────────────────


def test_step_from_truth_interpolates_exactly():
    inst = make_noiseless()
    beta = lspa_step(inst.data.X, inst.data.y, inst.beta_star)
    np.testing.assert_allclose(beta.flat, inst.beta_star.flat, atol=1e-10)


def test_single_component_step_is_ols():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(25, 3))
    y = rng.normal(size=25)
    beta = lspa_step(X, y, ParamBlocks.zeros(1, 3))
    np.testing.assert_allclose(beta.flat, least_squares(X, y), atol=1e-12)


def test_empty_partition_keeps_block():
    """Block 2 never wins on data with positive first coordinate."""
    X = np.column_stack([np.linspace(1.0, 2.0, 10), np.zeros(10)])
    y = 3.0 * X[:, 0]
    beta = ParamBlocks.from_blocks([[1.0, 0.0], [-1.0, 7.0]])
    step = lspa_step(X, y, beta)
    np.testing.assert_allclose(step.block(0), [3.0, 0.0], atol=1e-12)
    np.testing.assert_array_equal(step.block(1), [-1.0, 7.0])


def test_step_does_not_increase_sse_on_fixed_assignment():
    inst = make_instance(SynthConfig(n=120, p=3, k=3, sigma=0.1, seed=4, truth_kind="gaussian"))
    X, y = inst.data.X, inst.data.y
    beta = inst.beta_tilde
    assignment = partition(X, beta)
    before = partition_sse(X, y, beta, assignment)
    after = partition_sse(X, y, lspa_step(X, y, beta), assignment)
    assert after <= before + 1e-12


# ── Full fit ─────────────────────────────────────────────────


def test_fit_from_truth_converges_quickly():
    inst = make_noiseless()
    fit = fit_lspa(inst.data.X, inst.data.y, inst.beta_star)
    assert fit.converged
    assert fit.iterations_run <= 2
    assert normalized_error(fit.beta_hat, inst.beta_star) < 1e-10


def test_fit_single_component_matches_ols():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(40, 3))
    y = X @ np.array([1.0, -2.0, 0.5]) + 0.1 * rng.normal(size=40)
    fit = fit_lspa(X, y, ParamBlocks.zeros(1, 3))
    assert fit.converged
    assert fit.iterations_run == 1
    np.testing.assert_allclose(fit.beta_hat.flat, least_squares(X, y), atol=1e-12)


def test_fit_recovers_from_perturbed_init():
    inst = make_noiseless(n=500, p=5, k=3, seed=21)
    fit = fit_lspa(inst.data.X, inst.data.y, inst.beta_tilde)
    assert fit.converged
    assert normalized_error(fit.beta_hat, inst.beta_star) < 1e-5


def test_sse_history_is_monotone_per_step():
    inst = make_instance(SynthConfig(n=150, p=4, k=3, sigma=0.2, seed=13, truth_kind="gaussian",
                                     perturbation_scale=0.05))
    fit = fit_lspa(inst.data.X, inst.data.y, inst.beta_tilde, max_iter=50)
    assert fit.sse_history
    for before, after in fit.sse_history:
        assert after <= before + 1e-9


def test_fit_reports_final_assignment():
    inst = make_noiseless()
    fit = fit_lspa(inst.data.X, inst.data.y, inst.beta_tilde)
    np.testing.assert_array_equal(fit.final_assignment, partition(inst.data.X, fit.beta_hat))
    np.testing.assert_allclose(evaluate(inst.data.X, fit.beta_hat), inst.data.y, atol=1e-8)


def test_iteration_cap():
    inst = make_instance(SynthConfig(n=100, p=3, k=3, sigma=0.3, seed=2, truth_kind="gaussian",
                                     perturbation_scale=0.5))
    fit = fit_lspa(inst.data.X, inst.data.y, inst.beta_tilde, max_iter=1)
    assert fit.iterations_run == 1
    assert fit.to_dict()["status"] in ("converged", "max_iter")


def test_max_iter_must_be_positive():
    inst = make_noiseless(n=20)
    with pytest.raises(ValueError):
        fit_lspa(inst.data.X, inst.data.y, inst.beta_tilde, max_iter=0)
