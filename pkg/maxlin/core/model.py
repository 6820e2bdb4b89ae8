"""
Max-linear model.

f(x; β) = max_j <x, β_j> over k parameter blocks in R^p.

- ParamBlocks: immutable flat kp vector with (k, p) block views
- Dataset: regressors X (n×p), observations y, optional noise w
- Evaluation, subgradients, cone assignment, ℓ1,2 norm, objectives

Component indices are 0-based. Ties go to the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np


class DimensionError(ValueError):
    """Array shapes do not match the model dimensions."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ParamBlocks:
    """k parameter blocks of length p stored as one contiguous kp vector."""
    flat: np.ndarray
    k: int
    p: int

    def __post_init__(self):
        if self.k < 1 or self.p < 1:
            raise DimensionError(f"k and p must be >= 1 (k={self.k}, p={self.p})")
        flat = np.asarray(self.flat, dtype=np.float64).ravel()
        if flat.size != self.k * self.p:
            raise DimensionError(f"expected {self.k * self.p} entries, got {flat.size}")
        if not np.all(np.isfinite(flat)):
            raise ValueError("parameter blocks must be finite")
        object.__setattr__(self, "flat", _frozen(flat))

    @classmethod
    def from_blocks(cls, blocks) -> "ParamBlocks":
        arr = np.asarray(blocks, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise DimensionError(f"blocks must be 2-D (k, p), got shape {arr.shape}")
        return cls(arr.ravel(), arr.shape[0], arr.shape[1])

    @classmethod
    def zeros(cls, k: int, p: int) -> "ParamBlocks":
        return cls(np.zeros(k * p), k, p)

    @property
    def blocks(self) -> np.ndarray:
        """Read-only (k, p) view."""
        return self.flat.reshape(self.k, self.p)

    def block(self, j: int) -> np.ndarray:
        return self.blocks[j]

    def with_block(self, j: int, values) -> "ParamBlocks":
        blocks = self.blocks.copy()
        blocks[j] = np.asarray(values, dtype=np.float64)
        return ParamBlocks.from_blocks(blocks)

    def _check_same_shape(self, other: "ParamBlocks") -> None:
        if (self.k, self.p) != (other.k, other.p):
            raise DimensionError(
                f"shape mismatch: ({self.k}, {self.p}) vs ({other.k}, {other.p})")

    def __add__(self, other: "ParamBlocks") -> "ParamBlocks":
        self._check_same_shape(other)
        return ParamBlocks(self.flat + other.flat, self.k, self.p)

    def __sub__(self, other: "ParamBlocks") -> "ParamBlocks":
        self._check_same_shape(other)
        return ParamBlocks(self.flat - other.flat, self.k, self.p)

    def __mul__(self, scalar: float) -> "ParamBlocks":
        return ParamBlocks(self.flat * float(scalar), self.k, self.p)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamBlocks):
            return NotImplemented
        return (self.k, self.p) == (other.k, other.p) and np.array_equal(self.flat, other.flat)

    def __hash__(self) -> int:
        return hash((self.k, self.p, self.flat.tobytes()))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Regressors, observations and (for synthetic data) the true noise."""
    X: np.ndarray
    y: np.ndarray
    w: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if X.ndim != 2:
            raise DimensionError(f"X must be 2-D, got shape {X.shape}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DimensionError(f"X must be non-empty, got shape {X.shape}")
        if y.size != X.shape[0]:
            raise DimensionError(f"y has {y.size} entries, X has {X.shape[0]} rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset entries must be finite")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))
        if self.w is not None:
            w = np.asarray(self.w, dtype=np.float64).ravel()
            if w.size != y.size:
                raise DimensionError(f"w has {w.size} entries, y has {y.size}")
            if not np.all(np.isfinite(w)):
                raise ValueError("noise entries must be finite")
            object.__setattr__(self, "w", _frozen(w))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _as_point(x, beta: ParamBlocks) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != beta.p:
        raise DimensionError(f"x has {x.size} entries, blocks have p={beta.p}")
    return x


def _as_rows(X, beta: ParamBlocks) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != beta.p:
        raise DimensionError(f"X must have shape (n, {beta.p}), got {X.shape}")
    return X


def eval_maxlinear(x, beta: ParamBlocks) -> Tuple[float, int]:
    """Return (max_j <x, β_j>, argmax) with ties to the lowest index."""
    scores = beta.blocks @ _as_point(x, beta)
    j = int(np.argmax(scores))
    return float(scores[j]), j


def cone_index(x, beta: ParamBlocks) -> int:
    """Index j of the cone C_j containing x."""
    return eval_maxlinear(x, beta)[1]


def subgradient(x, beta: ParamBlocks) -> np.ndarray:
    """kp vector: x in the argmax block, zeros elsewhere."""
    x = _as_point(x, beta)
    j = cone_index(x, beta)
    grad = np.zeros(beta.k * beta.p)
    grad[j * beta.p:(j + 1) * beta.p] = x
    return grad


def scores(X, beta: ParamBlocks) -> np.ndarray:
    """(n, k) matrix of <x_i, β_j>."""
    return _as_rows(X, beta) @ beta.blocks.T


def evaluate(X, beta: ParamBlocks) -> np.ndarray:
    """Row-wise f(x_i; β)."""
    return scores(X, beta).max(axis=1)


def assign_cones(X, beta: ParamBlocks) -> np.ndarray:
    """Row-wise cone index; np.argmax keeps the first maximum."""
    return np.argmax(scores(X, beta), axis=1)


# ---------------------------------------------------------------------------
# Norms and objectives
# ---------------------------------------------------------------------------

def norm_12(z: ParamBlocks) -> float:
    """Sum of block ℓ2 norms."""
    return float(np.linalg.norm(z.blocks, axis=1).sum())


def _residuals(beta: ParamBlocks, data: Dataset) -> np.ndarray:
    if data.p != beta.p:
        raise DimensionError(f"dataset has p={data.p}, blocks have p={beta.p}")
    return evaluate(data.X, beta) - data.y


def lad_objective(beta: ParamBlocks, data: Dataset) -> float:
    return float(np.mean(np.abs(_residuals(beta, data))))


def positive_residual_objective(beta: ParamBlocks, data: Dataset) -> float:
    return float(np.mean(np.maximum(_residuals(beta, data), 0.0)))


def least_squares_objective(beta: ParamBlocks, data: Dataset) -> float:
    return float(np.mean(_residuals(beta, data) ** 2))


def normalized_error(beta_hat: ParamBlocks, beta_star: ParamBlocks) -> float:
    """||β̂ - β⋆||_{1,2} / ||β⋆||_{1,2}, blocks compared in index order."""
    denom = norm_12(beta_star)
    if denom == 0.0:
        raise ValueError("ground truth has zero norm")
    return norm_12(beta_hat - beta_star) / denom
