"""
Least-squares partition algorithm (LSPA).

Alternates between assigning samples to the cones of the current estimate
and refitting each block by least squares on its samples. Stops when the
assignment repeats or after ``max_iter`` steps.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from maxlin.core.linalg import least_squares
from maxlin.core.model import DimensionError, ParamBlocks, assign_cones

logger = logging.getLogger(__name__)


@dataclass
class LspaResult:
    beta_hat: ParamBlocks
    iterations_run: int
    converged: bool
    final_assignment: np.ndarray
    sse_history: List[Tuple[float, float]] = field(default_factory=list, repr=False)  # (before, after) per step
    wall_time: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": "lspa",
            "status": "converged" if self.converged else "max_iter",
            "iterations": self.iterations_run,
            "converged": self.converged,
            "final_sse": self.sse_history[-1][1] if self.sse_history else None,
            "wall_time": round(self.wall_time, 6),
        }


def _check(X, y, beta: ParamBlocks):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != beta.p:
        raise DimensionError(f"X must have shape (n, {beta.p}), got {X.shape}")
    if y is not None:
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.size != X.shape[0]:
            raise DimensionError(f"y has {y.size} entries, X has {X.shape[0]} rows")
    return X, y


def partition(X, beta: ParamBlocks) -> np.ndarray:
    X, _ = _check(X, None, beta)
    return assign_cones(X, beta)


def partition_sse(X, y, beta: ParamBlocks, assignment: np.ndarray) -> float:
    """Σ_i (<x_i, β_{a(i)}> - y_i)² for a fixed assignment a."""
    X, y = _check(X, y, beta)
    fitted = np.einsum('ij,ij->i', X, beta.blocks[assignment])
    return float(np.sum((fitted - y) ** 2))


def _refit(X, y, beta: ParamBlocks, assignment: np.ndarray) -> ParamBlocks:
    for j in range(beta.k):
        rows = assignment == j
        if rows.any():
            beta = beta.with_block(j, least_squares(X[rows], y[rows]))
    return beta


def lspa_step(X, y, beta: ParamBlocks) -> ParamBlocks:
    """One partition + per-block least-squares update; empty cones keep their block."""
    X, y = _check(X, y, beta)
    return _refit(X, y, beta, assign_cones(X, beta))


def fit_lspa(X, y, beta_init: ParamBlocks, max_iter: int = 200) -> LspaResult:
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    X, y = _check(X, y, beta_init)
    started = time.perf_counter()

    beta = beta_init
    assignment = assign_cones(X, beta)
    history = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        before = partition_sse(X, y, beta, assignment)
        beta = _refit(X, y, beta, assignment)
        history.append((before, partition_sse(X, y, beta, assignment)))
        new_assignment = assign_cones(X, beta)
        if np.array_equal(new_assignment, assignment):
            converged = True
            break
        assignment = new_assignment

    elapsed = time.perf_counter() - started
    logger.debug("LSPA %s after %d iterations (%.2fs)",
                 "converged" if converged else "stopped at cap", iterations, elapsed)
    return LspaResult(beta, iterations, converged, new_assignment, history, elapsed)
