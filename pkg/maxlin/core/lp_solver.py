"""
Dense linear programming.

Problems are stated as: maximize <c, x> subject to rows (a_r, sense, b_r)
and per-variable bounds. ``to_standard_form`` rewrites them as

    maximize <c', x'>   s.t.  A' x' (+ slack) = b',  x' >= 0

and ``RevisedSimplexSolver`` runs a two-phase revised simplex on that form:

- basis kept as an LU factorization of the structural kernel (the rows not
  covered by basic slack/artificial columns), plus product-form eta updates,
  refactorized every ``refactor_every`` pivots
- Dantzig pricing, Bland's rule after ``bland_after`` consecutive
  degenerate pivots
- iteration cap ``iteration_factor * (rows + cols)`` raising IterationLimitError
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from maxlin.config import SolverParams
from maxlin.core.model import DimensionError

logger = logging.getLogger(__name__)

DEGENERATE_STEP = 1e-12


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class Sense(str, Enum):
    LE = "<="
    GE = ">="
    EQ = "="


class IterationLimitError(RuntimeError):
    """The simplex iteration cap was reached before termination."""

    def __init__(self, iterations: int, phase: int):
        super().__init__(f"iteration limit {iterations} reached in phase {phase}")
        self.iterations = iterations
        self.phase = phase


class LpNumericalError(RuntimeError):
    """The basis became numerically singular."""


# ---------------------------------------------------------------------------
# Problem and solution types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constraint:
    row: np.ndarray
    sense: Sense
    rhs: float


@dataclass(frozen=True, eq=False)
class LpProblem:
    """Dense LP: maximize objective @ x over the constraint rows and bounds."""
    objective: np.ndarray
    A: np.ndarray
    senses: Tuple[Sense, ...]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=np.float64).ravel()
        nv = c.size
        A = np.asarray(self.A, dtype=np.float64)
        if A.size == 0:
            A = A.reshape(0, nv)
        if A.ndim != 2 or A.shape[1] != nv:
            raise DimensionError(f"constraint matrix must have {nv} columns, got shape {A.shape}")
        m = A.shape[0]
        b = np.asarray(self.rhs, dtype=np.float64).ravel()
        senses = tuple(Sense(s) for s in self.senses)
        if b.size != m or len(senses) != m:
            raise DimensionError(f"{m} rows need {m} senses and rhs values")
        lo = np.asarray(self.lower, dtype=np.float64).ravel()
        hi = np.asarray(self.upper, dtype=np.float64).ravel()
        if lo.size != nv or hi.size != nv:
            raise DimensionError(f"bounds must have {nv} entries")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("objective, rows and rhs must be finite")
        if np.any(lo > hi) or np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValueError("each variable needs lower <= upper with lower < inf and upper > -inf")
        for name, value in (("objective", c), ("A", A), ("rhs", b), ("lower", lo), ("upper", hi)):
            value = value.copy()
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "senses", senses)

    @classmethod
    def from_constraints(cls, objective, constraints: Iterable, bounds: Optional[Sequence] = None
                         ) -> "LpProblem":
        """Build from (row, sense, rhs) items; bounds default to x >= 0."""
        c = np.asarray(objective, dtype=np.float64).ravel()
        rows, senses, rhs = [], [], []
        for item in constraints:
            row, sense, value = (item.row, item.sense, item.rhs) if isinstance(item, Constraint) else item
            rows.append(np.asarray(row, dtype=np.float64).ravel())
            senses.append(Sense(sense))
            rhs.append(float(value))
        A = np.vstack(rows) if rows else np.zeros((0, c.size))
        if bounds is None:
            lower, upper = np.zeros(c.size), np.full(c.size, np.inf)
        else:
            bounds = list(bounds)
            if len(bounds) != c.size:
                raise DimensionError(f"expected {c.size} bounds, got {len(bounds)}")
            lower = np.array([-np.inf if lo is None else lo for lo, _ in bounds], dtype=np.float64)
            upper = np.array([np.inf if hi is None else hi for _, hi in bounds], dtype=np.float64)
        return cls(c, A, tuple(senses), np.asarray(rhs), lower, upper)

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class LpSolution:
    status: LpStatus
    x: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    iterations: int = 0
    max_reduced_cost: Optional[float] = None   # Optimality certificate
    phase1_infeasibility: float = 0.0


@dataclass
class VerificationReport:
    feasible: bool
    max_violation: float
    objective: float
    row_violations: np.ndarray = field(repr=False, default=None)
    bound_violations: np.ndarray = field(repr=False, default=None)


# ---------------------------------------------------------------------------
# Standard form
# ---------------------------------------------------------------------------

@dataclass
class VariableMap:
    """x = offset + Σ_slot coefs[:, slot] * x'[columns[:, slot]] (column -1 unused)."""
    offset: np.ndarray
    columns: np.ndarray
    coefs: np.ndarray

    def recover(self, x_canon: np.ndarray) -> np.ndarray:
        x = self.offset.copy()
        for slot in range(self.columns.shape[1]):
            used = self.columns[:, slot] >= 0
            x[used] += self.coefs[used, slot] * x_canon[self.columns[used, slot]]
        return x


@dataclass
class StandardForm:
    """Canonical problem: maximize c @ x' s.t. A x' + diag(slack_sign) s = b, x', s >= 0.

    Slack columns are implicit: +1 for ≤ rows and finite upper bounds, -1
    (surplus) for ≥ rows, none for equality rows.
    """
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    slack_sign: np.ndarray
    objective_offset: float
    var_map: VariableMap
    num_original_rows: int

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def num_slacks(self) -> int:
        return int(np.count_nonzero(self.slack_sign))

    def full_matrix(self) -> Tuple[np.ndarray, np.ndarray]:
        """Materialize [A | slack columns] and the matching cost vector."""
        rows = np.flatnonzero(self.slack_sign)
        S = np.zeros((self.num_rows, rows.size))
        S[rows, np.arange(rows.size)] = self.slack_sign[rows]
        return np.hstack([self.A, S]), np.concatenate([self.c, np.zeros(rows.size)])


def to_standard_form(problem: LpProblem) -> StandardForm:
    nv = problem.num_vars
    offset = np.zeros(nv)
    columns = np.full((nv, 2), -1, dtype=np.int64)
    coefs = np.zeros((nv, 2))
    bound_rows = []
    ncol = 0
    for i in range(nv):
        lo, hi = problem.lower[i], problem.upper[i]
        if np.isfinite(lo):
            offset[i] = lo
            columns[i, 0], coefs[i, 0] = ncol, 1.0
            if np.isfinite(hi):
                bound_rows.append((ncol, hi - lo))
            ncol += 1
        elif np.isfinite(hi):
            offset[i] = hi
            columns[i, 0], coefs[i, 0] = ncol, -1.0
            ncol += 1
        else:
            columns[i] = (ncol, ncol + 1)
            coefs[i] = (1.0, -1.0)
            ncol += 2

    m = problem.num_rows
    A = np.zeros((m + len(bound_rows), ncol))
    c = np.zeros(ncol)
    for slot in range(2):
        used = columns[:, slot] >= 0
        A[:m, columns[used, slot]] = problem.A[:, used] * coefs[used, slot]
        c[columns[used, slot]] = problem.objective[used] * coefs[used, slot]
    b = np.concatenate([problem.rhs - problem.A @ offset,
                        np.array([ub for _, ub in bound_rows], dtype=np.float64)])
    for r, (col, _) in enumerate(bound_rows):
        A[m + r, col] = 1.0

    sign_of = {Sense.LE: 1.0, Sense.GE: -1.0, Sense.EQ: 0.0}
    slack_sign = np.array([sign_of[s] for s in problem.senses] + [1.0] * len(bound_rows))
    return StandardForm(
        A=A, b=b, c=c, slack_sign=slack_sign,
        objective_offset=float(problem.objective @ offset),
        var_map=VariableMap(offset, columns, coefs),
        num_original_rows=m,
    )


# ---------------------------------------------------------------------------
# Basis factorization
# ---------------------------------------------------------------------------

class _BasisFactor:
    """Solves with the basis matrix B = [A | unit columns][:, basis].

    Basic unit columns (slacks, surpluses, artificials) cover a row set U;
    the structural columns S must then be invertible on the complementary
    rows K. Only the |S|×|S| kernel A[K, S] is factorized.
    """

    def __init__(self, A: np.ndarray, unit_sign: np.ndarray, basis: np.ndarray):
        m, ns = A.shape
        self._m = m
        self.struct_pos = np.flatnonzero(basis < ns)
        self.unit_pos = np.flatnonzero(basis >= ns)
        unit_cols = basis[self.unit_pos] - ns
        self.unit_rows = unit_cols % m if m else unit_cols
        self.unit_sign = unit_sign[unit_cols]
        self.kernel_rows = np.setdiff1d(np.arange(m), self.unit_rows, assume_unique=True)
        struct_cols = basis[self.struct_pos]
        if self.kernel_rows.size != struct_cols.size:
            raise LpNumericalError("basis covers a row twice")

        self._lu = None
        if struct_cols.size:
            kernel = A[np.ix_(self.kernel_rows, struct_cols)]
            lu, piv = lu_factor(kernel, check_finite=False)
            d = np.abs(np.diag(lu))
            if not np.all(np.isfinite(lu)) or d.min() == 0.0:
                raise LpNumericalError("singular basis kernel")
            self._lu = (lu, piv)
        self._coupling = A[np.ix_(self.unit_rows, struct_cols)]
        self._etas: List[Tuple[int, np.ndarray]] = []

    @property
    def num_updates(self) -> int:
        return len(self._etas)

    def ftran(self, a: np.ndarray) -> np.ndarray:
        """B^{-1} a, indexed by basis position."""
        x = np.empty(self._m)
        if self._lu is not None:
            xs = lu_solve(self._lu, a[self.kernel_rows], check_finite=False)
            x[self.struct_pos] = xs
            x[self.unit_pos] = (a[self.unit_rows] - self._coupling @ xs) / self.unit_sign
        else:
            x[self.unit_pos] = a[self.unit_rows] / self.unit_sign
        for r, d in self._etas:
            pivot = x[r] / d[r]
            x -= pivot * d
            x[r] = pivot
        return x

    def btran(self, cb: np.ndarray) -> np.ndarray:
        """B^{-T} cb, indexed by row."""
        c = np.array(cb, dtype=np.float64, copy=True)
        for r, d in reversed(self._etas):
            c[r] = (c[r] - (d @ c - d[r] * c[r])) / d[r]
        y = np.empty(self._m)
        yu = c[self.unit_pos] / self.unit_sign
        y[self.unit_rows] = yu
        if self._lu is not None:
            rhs = c[self.struct_pos] - self._coupling.T @ yu
            y[self.kernel_rows] = lu_solve(self._lu, rhs, trans=1, check_finite=False)
        return y

    def push(self, r: int, d: np.ndarray) -> None:
        self._etas.append((r, d.copy()))


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------

class RevisedSimplexSolver:
    """Single-use two-phase revised simplex for one LpProblem.

    Column layout of the working problem (after flipping rows to b >= 0):
    structural columns [0, ns), slack of row i at ns + i, artificial of
    row i at ns + m + i.
    """

    def __init__(self, problem: LpProblem, params: Optional[SolverParams] = None,
                 tol: Optional[float] = None):
        self.problem = problem
        self.params = params or SolverParams()
        self.tol = float(tol if tol is not None else self.params.tol)
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        self.form = to_standard_form(problem)

        b0, s0 = self.form.b, self.form.slack_sign
        flip = np.where((b0 < 0) | ((b0 == 0) & (s0 < 0)), -1.0, 1.0)
        self._A = self.form.A * flip[:, None]
        self._b = self.form.b * flip
        m, ns = self._A.shape
        self._m, self._ns = m, ns
        slack_sign = self.form.slack_sign * flip
        self._unit_sign = np.concatenate([np.where(slack_sign == 0.0, 1.0, slack_sign), np.ones(m)])

        self._allowed = np.ones(ns + 2 * m, dtype=bool)
        self._allowed[ns:ns + m] = slack_sign != 0.0
        self._basis = np.where(slack_sign > 0.0, ns + np.arange(m), ns + m + np.arange(m))
        self._allowed[ns + m:] = False
        self._allowed[self._basis[self._basis >= ns + m]] = True
        self._is_basic = np.zeros(ns + 2 * m, dtype=bool)
        self._is_basic[self._basis] = True

        self.max_iter = self.params.iteration_factor * (m + ns + m)
        self.iterations = 0
        self._factor: Optional[_BasisFactor] = None
        self._xb = np.zeros(m)
        self._used = False

    # -- linear algebra helpers --

    def _refactor(self) -> None:
        self._factor = _BasisFactor(self._A, self._unit_sign, self._basis)
        self._xb = self._factor.ftran(self._b)

    def _column(self, j: int) -> np.ndarray:
        if j < self._ns:
            return self._A[:, j]
        col = np.zeros(self._m)
        u = j - self._ns
        col[u % self._m] = self._unit_sign[u]
        return col

    def _reduced_costs(self, cost: np.ndarray, y: np.ndarray) -> np.ndarray:
        ns, m = self._ns, self._m
        d = np.empty(ns + 2 * m)
        d[:ns] = cost[:ns] - self._A.T @ y
        d[ns:ns + m] = cost[ns:ns + m] - self._unit_sign[:m] * y
        d[ns + m:] = cost[ns + m:] - y
        d[~self._allowed | self._is_basic] = -np.inf
        return d

    def _pivot(self, r: int, q: int, col: np.ndarray, theta: float) -> None:
        self._xb -= theta * col
        self._xb[r] = theta
        leaving = self._basis[r]
        self._is_basic[leaving] = False
        if leaving >= self._ns + self._m:
            self._allowed[leaving] = False
        self._basis[r] = q
        self._is_basic[q] = True
        self._factor.push(r, col)
        self.iterations += 1

    def _ratio_test(self, col: np.ndarray, bland: bool) -> int:
        eligible = col > self.tol
        if not eligible.any():
            return -1
        xb = np.maximum(self._xb, 0.0)
        ratios = np.full(self._m, np.inf)
        ratios[eligible] = xb[eligible] / col[eligible]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + DEGENERATE_STEP * (1.0 + best))
        if bland:
            return int(ties[np.argmin(self._basis[ties])])
        return int(ties[np.argmax(col[ties])])

    # -- phases --

    def _run_phase(self, cost: np.ndarray, phase: int) -> LpStatus:
        cost_scale = max(1.0, float(np.abs(cost).max())) if cost.size else 1.0
        dtol = self.tol * cost_scale
        bland = False
        degenerate_run = 0
        while True:
            if self.iterations >= self.max_iter:
                raise IterationLimitError(self.iterations, phase)
            if self._factor.num_updates >= self.params.refactor_every:
                self._refactor()
            y = self._factor.btran(cost[self._basis])
            d = self._reduced_costs(cost, y)
            if bland:
                candidates = np.flatnonzero(d > dtol)
                if candidates.size == 0:
                    return LpStatus.OPTIMAL
                q = int(candidates[0])
            else:
                q = int(np.argmax(d)) if d.size else 0
                if d.size == 0 or d[q] <= dtol:
                    return LpStatus.OPTIMAL

            col = self._factor.ftran(self._column(q))
            r = self._ratio_test(col, bland)
            if r < 0:
                return LpStatus.UNBOUNDED
            theta = max(self._xb[r], 0.0) / col[r]
            self._pivot(r, q, col, theta)

            if theta <= DEGENERATE_STEP:
                degenerate_run += 1
                if not bland and degenerate_run >= self.params.bland_after:
                    logger.debug("Phase %d stall after %d degenerate pivots, switching to Bland's rule",
                                  phase, degenerate_run)
                    bland = True
            else:
                degenerate_run = 0

    def _drive_out_artificials(self) -> None:
        ns, m = self._ns, self._m
        for r in np.flatnonzero(self._basis >= ns + m):
            e = np.zeros(m)
            e[r] = 1.0
            rho = self._factor.btran(e)
            alpha = np.concatenate([self._A.T @ rho, self._unit_sign[:m] * rho])
            alpha[~self._allowed[:ns + m] | self._is_basic[:ns + m]] = 0.0
            q = int(np.argmax(np.abs(alpha)))
            if abs(alpha[q]) <= 1e-7:
                continue  # redundant row, artificial stays basic at zero
            col = self._factor.ftran(self._column(q))
            self._pivot(r, q, col, self._xb[r] / col[r])
        self._allowed[ns + m:] = False
        self._refactor()

    def solve(self) -> LpSolution:
        if self._used:
            raise RuntimeError("RevisedSimplexSolver instances are single-use")
        self._used = True
        ns, m = self._ns, self._m
        self._refactor()

        infeasibility = 0.0
        if np.any(self._basis >= ns + m):
            cost1 = np.zeros(ns + 2 * m)
            cost1[ns + m:] = -1.0
            self._run_phase(cost1, phase=1)
            self._refactor()
            infeasibility = float(np.maximum(self._xb[self._basis >= ns + m], 0.0).sum())
            scale = 1.0 + (float(np.abs(self._b).max()) if m else 0.0)
            if infeasibility > self.tol * scale:
                logger.debug("Phase 1 ended with infeasibility %.3e after %d iterations",
                             infeasibility, self.iterations)
                return LpSolution(LpStatus.INFEASIBLE, iterations=self.iterations,
                                  phase1_infeasibility=infeasibility)
            self._drive_out_artificials()

        cost2 = np.zeros(ns + 2 * m)
        cost2[:ns] = self.form.c
        status = self._run_phase(cost2, phase=2)
        if status is LpStatus.UNBOUNDED:
            return LpSolution(LpStatus.UNBOUNDED, iterations=self.iterations,
                              phase1_infeasibility=infeasibility)

        self._refactor()
        y = self._factor.btran(cost2[self._basis])
        d = self._reduced_costs(cost2, y)
        max_rc = float(d.max()) if np.isfinite(d).any() else 0.0

        x_canon = np.zeros(ns)
        struct = self._basis < ns
        x_canon[self._basis[struct]] = np.maximum(self._xb[struct], 0.0)
        x = self.form.var_map.recover(x_canon)
        return LpSolution(
            status=LpStatus.OPTIMAL,
            x=x,
            objective_value=float(self.problem.objective @ x),
            iterations=self.iterations,
            max_reduced_cost=max_rc,
            phase1_infeasibility=infeasibility,
        )


def solve(problem: LpProblem, tol: float = 1e-9, params: Optional[SolverParams] = None) -> LpSolution:
    """Solve ``problem`` with a fresh RevisedSimplexSolver."""
    return RevisedSimplexSolver(problem, params=params, tol=tol).solve()


# ---------------------------------------------------------------------------
# Verification and debug dump
# ---------------------------------------------------------------------------

def verify_solution(problem: LpProblem, x, tol: float = 1e-9) -> VerificationReport:
    """Per-row and per-bound violations of ``x``; no solving."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != problem.num_vars:
        raise DimensionError(f"x has {x.size} entries, problem has {problem.num_vars} variables")
    ax = problem.A @ x
    viol = np.zeros(problem.num_rows)
    for r, sense in enumerate(problem.senses):
        gap = ax[r] - problem.rhs[r]
        if sense is Sense.LE:
            viol[r] = max(gap, 0.0)
        elif sense is Sense.GE:
            viol[r] = max(-gap, 0.0)
        else:
            viol[r] = abs(gap)
    bound_viol = np.maximum(np.maximum(problem.lower - x, x - problem.upper), 0.0)

    row_ok = np.all(viol <= tol * (1.0 + np.abs(problem.rhs)))
    finite_lo = np.where(np.isfinite(problem.lower), np.abs(problem.lower), 0.0)
    finite_hi = np.where(np.isfinite(problem.upper), np.abs(problem.upper), 0.0)
    bound_ok = np.all(bound_viol <= tol * (1.0 + np.maximum(finite_lo, finite_hi)))
    max_violation = float(max(viol.max(initial=0.0), bound_viol.max(initial=0.0)))
    return VerificationReport(
        feasible=bool(row_ok and bound_ok),
        max_violation=max_violation,
        objective=float(problem.objective @ x),
        row_violations=viol,
        bound_violations=bound_viol,
    )


def _linear_terms(coefs: np.ndarray) -> str:
    terms = [f"{v:+.17g} x{i + 1}" for i, v in enumerate(coefs) if v != 0.0]
    return " ".join(terms) if terms else "0"


def dump_problem(problem: LpProblem, path: Union[str, Path]) -> Path:
    """Write a plain-text listing: objective line, one row per line, bounds."""
    path = Path(path)
    lines = [f"max: {_linear_terms(problem.objective)}"]
    for r in range(problem.num_rows):
        lines.append(f"r{r + 1}: {_linear_terms(problem.A[r])} {problem.senses[r].value} "
                     f"{problem.rhs[r]:.17g}")
    for i in range(problem.num_vars):
        lines.append(f"bound x{i + 1}: {problem.lower[i]:.17g} <= x{i + 1} <= {problem.upper[i]:.17g}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
