"""Tests for dense least squares and matvec."""

import numpy as np
import pytest

from maxlin.core.linalg import least_squares, matvec
from maxlin.core.model import DimensionError


def test_single_column_gives_mean():
    np.testing.assert_allclose(least_squares([[1.0], [1.0]], [1.0, 3.0]), [2.0])


def test_identity_returns_rhs():
    b = np.array([0.3, -1.2, 4.0])
    np.testing.assert_allclose(least_squares(np.eye(3), b), b)


def test_residual_orthogonal_to_columns():
    rng = np.random.default_rng(8)
    A = rng.normal(size=(20, 3))
    b = rng.normal(size=20)
    x = least_squares(A, b)
    assert np.abs(A.T @ (A @ x - b)).max() < 1e-9


def test_matches_lstsq_on_random_tall_matrices():
    rng = np.random.default_rng(21)
    for _ in range(10):
        A = rng.normal(size=(15, 4))
        b = rng.normal(size=15)
        np.testing.assert_allclose(least_squares(A, b), np.linalg.lstsq(A, b, rcond=None)[0], atol=1e-10)


def test_rank_deficient_minimum_norm():
    """Duplicated column: the minimum-norm solution splits the weight evenly."""
    a = np.array([1.0, 2.0, 3.0])
    A = np.column_stack([a, a])
    x = least_squares(A, 2.0 * a)
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-12)


def test_underdetermined_minimum_norm():
    A = np.array([[1.0, 1.0, 0.0]])
    np.testing.assert_allclose(least_squares(A, [2.0]), [1.0, 1.0, 0.0], atol=1e-12)


def test_zero_matrix_gives_zero():
    np.testing.assert_array_equal(least_squares(np.zeros((4, 2)), np.ones(4)), [0.0, 0.0])


def test_least_squares_dimension_mismatch():
    with pytest.raises(DimensionError):
        least_squares(np.ones((3, 2)), np.ones(4))


@pytest.mark.parametrize("A, v, expected", [
    (np.eye(3), [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]),
    (np.zeros((2, 3)), [1.0, 2.0, 3.0], [0.0, 0.0]),
    ([[1.0, 2.0], [3.0, 4.0]], [1.0, 1.0], [3.0, 7.0]),
])
def test_matvec(A, v, expected):
    np.testing.assert_allclose(matvec(A, v), expected)


def test_matvec_dimension_mismatch():
    with pytest.raises(DimensionError):
        matvec(np.eye(2), [1.0, 2.0, 3.0])
