"""
Monte Carlo grid runner.

Each grid cell (n, p, k, sigma) runs ``trials`` synthetic instances. Trial
seeds depend on (master_seed, n, p, k, trial) only, so cells that differ
only in sigma see the same regressors, truth and initial estimate.

Trials fan out to a multiprocessing pool; results are sorted back into
cell/trial order before the per-cell medians are taken, so the grid CSV
is a pure function of the config.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, asdict
from itertools import product
from multiprocessing import Pool
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import pandas as pd

from maxlin.config import GridConfig, GridMode, Method, SolverParams, SynthConfig, TruthKind
from maxlin.core.lp_solver import IterationLimitError, LpNumericalError
from maxlin.core.model import normalized_error
from maxlin.core.synth import derive_seed, make_instance
from maxlin.estimators.anchored import fit_ce
from maxlin.estimators.lspa import fit_lspa
from maxlin.utils.io import GRID_COLUMNS, FormatError, read_grid_csv
from maxlin.utils.metrics import RunTracker

try:
    from tqdm import tqdm
    HAS_TQDM = True
except ImportError:
    HAS_TQDM = False

logger = logging.getLogger(__name__)

SENTINEL = math.inf


@dataclass(frozen=True)
class Cell:
    n: int
    p: int
    k: int
    sigma: float


@dataclass
class TrialResult:
    n: int
    p: int
    k: int
    sigma: float
    method: str
    trial: int
    seed: int
    normalized_error: float      # inf when the fit produced no estimate
    status: str
    wall_time: float
    iterations: int = 0


@dataclass
class GridRow:
    mode: str
    k: int
    p: int
    n: int
    sigma: float
    method: str
    trials: int
    median_error: float
    finite_trials: int


# ---------------------------------------------------------------------------
# Single trial
# ---------------------------------------------------------------------------

def trial_seed(master_seed: int, n: int, p: int, k: int, trial: int) -> int:
    return derive_seed(master_seed, n, p, k, trial)


def _fit_one(method: Method, instance, max_iter: int, solver_params: Optional[SolverParams]
             ) -> Tuple[float, str, int]:
    data = instance.data
    try:
        if method is Method.CE:
            fit = fit_ce(data.X, data.y, instance.beta_tilde, instance.eta,
                         tol=(solver_params or SolverParams()).tol, params=solver_params)
            if not fit.ok:
                return SENTINEL, fit.lp_status.value, fit.solve_iterations
            return normalized_error(fit.beta_hat, instance.beta_star), fit.lp_status.value, fit.solve_iterations
        fit = fit_lspa(data.X, data.y, instance.beta_tilde, max_iter=max_iter)
        status = "converged" if fit.converged else "max_iter"
        return normalized_error(fit.beta_hat, instance.beta_star), status, fit.iterations_run
    except IterationLimitError as exc:
        logger.warning("%s fit hit the iteration cap: %s", method.value, exc)
        return SENTINEL, "iteration_limit", exc.iterations
    except LpNumericalError as exc:
        logger.warning("%s fit failed numerically: %s", method.value, exc)
        return SENTINEL, "numerical", 0


def run_trial(n: int, p: int, k: int, sigma: float, truth_kind: TruthKind, seed: int,
              methods: Sequence[Method], max_iter: int = 200,
              solver_params: Optional[SolverParams] = None, trial: int = 0) -> List[TrialResult]:
    """Fit every method on one synthetic instance; all methods share (X, y, β̃)."""
    instance = make_instance(SynthConfig(n=n, p=p, k=k, truth_kind=truth_kind, sigma=sigma, seed=seed))
    results = []
    for method in methods:
        method = Method(method)
        started = time.perf_counter()
        error, status, iterations = _fit_one(method, instance, max_iter, solver_params)
        results.append(TrialResult(n, p, k, float(sigma), method.value, trial, seed, float(error),
                                   status, time.perf_counter() - started, iterations))
    return results


# ---------------------------------------------------------------------------
# Worker
# ---------------------------------------------------------------------------

_worker_solver: Optional[SolverParams] = None
_worker_max_iter: int = 200


def _init_worker(solver_params: Optional[SolverParams], max_iter: int):
    """Initialize worker process globals."""
    global _worker_solver, _worker_max_iter
    _worker_solver = solver_params
    _worker_max_iter = max_iter


def _run_task(task: Tuple[int, int, Cell, int, str, Tuple[str, ...]]
              ) -> Tuple[int, int, List[TrialResult]]:
    """
    Worker function: run one trial and return (cell_index, trial, results).
    Must be top-level for pickling.
    """
    cell_index, trial, cell, seed, truth_kind, methods = task
    try:
        results = run_trial(cell.n, cell.p, cell.k, cell.sigma, TruthKind(truth_kind), seed,
                            [Method(m) for m in methods], _worker_max_iter, _worker_solver, trial)
    except Exception:
        logger.exception("Trial %d of cell %s failed", trial, cell)
        results = [TrialResult(cell.n, cell.p, cell.k, cell.sigma, m, trial, seed, SENTINEL,
                               "error", 0.0) for m in methods]
    return cell_index, trial, results


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------

def grid_cells(config: GridConfig) -> List[Cell]:
    """Cells in reporting order: column value, then n."""
    if config.mode is GridMode.NOISE_SWEEP:
        return [Cell(n, config.fixed_p, config.fixed_k, sigma)
                for sigma, n in product(config.axis_values, config.n_values)]
    if config.mode is GridMode.FIX_K_VARY_P:
        return [Cell(n, p, config.fixed_k, config.sigma)
                for p, n in product(config.axis_values, config.n_values)]
    return [Cell(n, config.fixed_p, k, config.sigma)
            for k, n in product(config.axis_values, config.n_values)]


def cell_median(errors: Iterable[float]) -> Tuple[float, int]:
    """(median, finite count): lower-middle finite value, or the sentinel when
    more than half the trials are sentinels."""
    errors = list(errors)
    finite = sorted(e for e in errors if math.isfinite(e))
    if not errors or len(errors) - len(finite) > len(errors) / 2:
        return SENTINEL, len(finite)
    return finite[(len(finite) - 1) // 2], len(finite)


@dataclass
class GridResult:
    config: GridConfig
    rows: List[GridRow]
    trials: List[TrialResult]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows], columns=GRID_COLUMNS)

    def trials_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(t) for t in self.trials])

    def boundaries(self, method: str = "ce", threshold: Optional[float] = None) -> Dict[Any, Optional[int]]:
        return phase_boundary(self.to_frame(), threshold or self.config.threshold, method)


def _execute(tasks: List[Tuple], workers: int, solver_params: Optional[SolverParams], max_iter: int,
             progress: bool) -> List[Tuple[int, int, List[TrialResult]]]:
    if workers <= 1:
        _init_worker(solver_params, max_iter)
        iterator = map(_run_task, tasks)
        if progress and HAS_TQDM:
            iterator = tqdm(iterator, total=len(tasks), desc="Trials", unit="trial", ncols=100)
        return list(iterator)

    out = []
    with Pool(processes=workers, initializer=_init_worker, initargs=(solver_params, max_iter)) as pool:
        iterator = pool.imap_unordered(_run_task, tasks)
        if progress and HAS_TQDM:
            iterator = tqdm(iterator, total=len(tasks), desc="Trials", unit="trial", ncols=100)
        for r in iterator:
            out.append(r)
    return out


def run_grid(config: GridConfig, workers: int = 1, solver_params: Optional[SolverParams] = None,
             progress: bool = False) -> GridResult:
    """Run every trial of every cell and reduce to per-cell medians.

    Args:
        config: Grid definition.
        workers: Worker processes (1 runs in-process).
        solver_params: LP settings passed to every CE fit.
        progress: Show a tqdm bar when tqdm is installed.

    Returns:
        GridResult with one row per (cell, method) in cell order.
    """
    cells = grid_cells(config)
    methods = tuple(m.value for m in config.methods)
    tasks = [(ci, t, cell, trial_seed(config.master_seed, cell.n, cell.p, cell.k, t),
              config.truth_kind.value, methods)
             for ci, cell in enumerate(cells) for t in range(config.trials)]
    logger.info("Grid %s: %d cells x %d trials = %d fits per method (%d workers)",
                config.mode.value, len(cells), config.trials, len(tasks), workers)

    started = time.perf_counter()
    finished = sorted(_execute(tasks, workers, solver_params, config.max_iter, progress),
                      key=lambda r: (r[0], r[1]))

    tracker = RunTracker(threshold=config.threshold)
    by_cell: Dict[int, List[TrialResult]] = {}
    all_trials: List[TrialResult] = []
    for cell_index, _, results in finished:
        by_cell.setdefault(cell_index, []).extend(results)
        all_trials.extend(results)
        for r in results:
            tracker.record(r.method, r.status, r.normalized_error, r.wall_time)

    rows = []
    for ci, cell in enumerate(cells):
        for method in methods:
            errors = [r.normalized_error for r in by_cell.get(ci, []) if r.method == method]
            median, finite = cell_median(errors)
            rows.append(GridRow(config.mode.value, cell.k, cell.p, cell.n, float(cell.sigma), method,
                                config.trials, median, finite))

    tracker.log_metrics(logger, elapsed=time.perf_counter() - started)
    return GridResult(config, rows, all_trials)


def noise_sweep(config: GridConfig, workers: int = 1, solver_params: Optional[SolverParams] = None,
                progress: bool = False) -> GridResult:
    """Median errors per (sigma, n) for each method on paired data."""
    if config.mode is not GridMode.NOISE_SWEEP:
        raise ValueError(f"noise_sweep needs mode=noise_sweep, got {config.mode.value}")
    return run_grid(config, workers, solver_params, progress)


# ---------------------------------------------------------------------------
# Boundaries
# ---------------------------------------------------------------------------

_COLUMN_OF_MODE = {
    GridMode.FIX_K_VARY_P.value: "p",
    GridMode.FIX_P_VARY_K.value: "k",
    GridMode.NOISE_SWEEP.value: "sigma",
}


def column_axis(frame: pd.DataFrame) -> str:
    modes = frame["mode"].unique()
    if len(modes) != 1 or modes[0] not in _COLUMN_OF_MODE:
        raise FormatError(f"grid must contain exactly one known mode, got {list(modes)}")
    return _COLUMN_OF_MODE[modes[0]]


def phase_boundary(grid, threshold: float = 1e-5, method: str = "ce") -> Dict[Any, Optional[int]]:
    """Per column, the smallest n from which every median stays below threshold.

    Args:
        grid: Grid CSV path or DataFrame with the grid columns.
        threshold: Recovery threshold.
        method: Method whose medians are used.

    Returns:
        {column value: boundary n or None}.
    """
    frame = read_grid_csv(grid) if not isinstance(grid, pd.DataFrame) else grid
    axis = column_axis(frame)
    frame = frame[frame["method"] == method]
    boundaries: Dict[Any, Optional[int]] = {}
    for value, group in frame.groupby(axis, sort=True):
        ordered = group.sort_values("n")
        boundary = None
        for n, median in zip(ordered["n"].to_numpy()[::-1], ordered["median_error"].to_numpy()[::-1]):
            if median < threshold:
                boundary = int(n)
            else:
                break
        boundaries[value.item() if hasattr(value, "item") else value] = boundary
    return boundaries
