"""
Anchored max-linear regression.

Anchor θ = (1/2n) Σ_i ∇f_i(β̃): block j is the (halved) sum of the
regressors that β̃ assigns to cone j. The estimate maximizes <θ, β> under a
one-sided residual budget, written as the LP

    maximize   <θ, β>
    subject to <x_i, β_j> - t_i <= y_i     for all i, j
               Σ_i t_i <= n·η,  t >= 0,  β free

Variables are ordered [β (kp, block-major), t (n)]; rows are ordered by
sample then component, with the budget row last.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from maxlin.config import SolverParams
from maxlin.core.lp_solver import LpProblem, LpStatus, Sense, RevisedSimplexSolver
from maxlin.core.model import DimensionError, ParamBlocks, assign_cones, evaluate

logger = logging.getLogger(__name__)


class EstimatorError(RuntimeError):
    """An estimate was requested from a fit that did not reach optimality."""


@dataclass(frozen=True, eq=False)
class AnchorVector:
    theta: np.ndarray
    k: int
    p: int

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64).ravel()
        if theta.size != self.k * self.p:
            raise DimensionError(f"anchor needs {self.k * self.p} entries, got {theta.size}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("anchor entries must be finite")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def blocks(self) -> np.ndarray:
        return self.theta.reshape(self.k, self.p)

    def scaled(self, factor: float) -> "AnchorVector":
        return AnchorVector(self.theta * factor, self.k, self.p)


@dataclass
class CeFitResult:
    """Outcome of one anchored fit."""
    beta_hat: Optional[ParamBlocks]
    lp_status: LpStatus
    objective: Optional[float]
    residual_budget_used: Optional[float]   # (1/n) Σ t_i at the optimum
    solve_iterations: int
    eta: float
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.lp_status is LpStatus.OPTIMAL

    def require_optimal(self) -> ParamBlocks:
        if not self.ok:
            raise EstimatorError(f"LP ended with status {self.lp_status.value}")
        return self.beta_hat

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": "ce",
            "status": self.lp_status.value,
            "objective": self.objective,
            "eta": self.eta,
            "residual_budget_used": self.residual_budget_used,
            "iterations": self.solve_iterations,
            "wall_time": round(self.wall_time, 6),
        }


def _check_inputs(X, y, beta: ParamBlocks):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != beta.p:
        raise DimensionError(f"X must have shape (n, {beta.p}), got {X.shape}")
    if y is not None:
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.size != X.shape[0]:
            raise DimensionError(f"y has {y.size} entries, X has {X.shape[0]} rows")
    return X, y


def build_anchor(X, beta_tilde: ParamBlocks) -> AnchorVector:
    X, _ = _check_inputs(X, None, beta_tilde)
    n = X.shape[0]
    theta = np.zeros((beta_tilde.k, beta_tilde.p))
    np.add.at(theta, assign_cones(X, beta_tilde), X)
    return AnchorVector(theta.ravel() / (2.0 * n), beta_tilde.k, beta_tilde.p)


def assemble_lp(X, y, theta: AnchorVector, eta: float) -> LpProblem:
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    k, p = theta.k, theta.p
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[1] != p or y.size != X.shape[0]:
        raise DimensionError(f"X must be (n, {p}) with n = len(y); got {X.shape} and {y.size}")
    n = X.shape[0]
    kp = k * p

    A = np.zeros((n * k + 1, kp + n))
    rows = np.arange(n * k)
    sample = rows // k
    component = rows % k
    # β_j occupies columns [j*p, (j+1)*p)
    col_idx = component[:, None] * p + np.arange(p)[None, :]
    A[rows[:, None], col_idx] = X[sample]
    A[rows, kp + sample] = -1.0
    A[n * k, kp:] = 1.0

    rhs = np.concatenate([y[sample], [n * eta]])
    objective = np.concatenate([theta.theta, np.zeros(n)])
    lower = np.concatenate([np.full(kp, -np.inf), np.zeros(n)])
    upper = np.full(kp + n, np.inf)
    senses = (Sense.LE,) * (n * k + 1)
    return LpProblem(objective, A, senses, rhs, lower, upper)


def truth_certificate(X, y, beta_star: ParamBlocks, eta: float, tol: float = 1e-9) -> bool:
    """True when (β⋆, t = (f(β⋆) - y)_+) satisfies the budget row."""
    X, y = _check_inputs(X, y, beta_star)
    t = np.maximum(evaluate(X, beta_star) - y, 0.0)
    return bool(t.sum() <= X.shape[0] * eta + tol * (1.0 + X.shape[0] * eta))


def fit_ce(X, y, beta_tilde: ParamBlocks, eta: float, tol: float = 1e-9,
           params: Optional[SolverParams] = None,
           anchor: Optional[AnchorVector] = None) -> CeFitResult:
    """Anchored regression estimate from initial guess ``beta_tilde``.

    Args:
        X: (n, p) regressors.
        y: length-n observations.
        beta_tilde: Initial estimate defining the anchor.
        eta: Residual budget, (1/n) Σ (-w_i)_+ for synthetic data.
        tol: Solver tolerance.
        params: Solver settings (refactorization, Bland threshold, cap).
        anchor: Precomputed anchor; built from ``beta_tilde`` when omitted.

    Returns:
        CeFitResult; ``beta_hat`` is None unless the LP status is optimal.

    Raises:
        IterationLimitError: The simplex iteration cap was hit.
    """
    X, y = _check_inputs(X, y, beta_tilde)
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    n, k, p = X.shape[0], beta_tilde.k, beta_tilde.p
    started = time.perf_counter()

    theta = anchor if anchor is not None else build_anchor(X, beta_tilde)
    problem = assemble_lp(X, y, theta, eta)
    solution = RevisedSimplexSolver(problem, params=params, tol=tol).solve()
    elapsed = time.perf_counter() - started

    if solution.status is not LpStatus.OPTIMAL:
        logger.warning("CE fit n=%d k=%d p=%d: LP %s after %d iterations",
                       n, k, p, solution.status.value, solution.iterations)
        return CeFitResult(None, solution.status, None, None, solution.iterations, eta, elapsed)

    beta_hat = ParamBlocks(solution.x[:k * p], k, p)
    budget = float(solution.x[k * p:].sum() / n)
    logger.debug("CE fit n=%d k=%d p=%d optimal in %d iterations (%.2fs), budget %.3g of %.3g",
                 n, k, p, solution.iterations, elapsed, budget, eta)
    return CeFitResult(beta_hat, solution.status, solution.objective_value, budget,
                       solution.iterations, eta, elapsed)
