"""Run tracker for grid sweeps: fit statuses, recoveries and wall time."""

from __future__ import annotations

import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np


@dataclass
class _MethodBucket:
    """Counters for one method."""
    fits: int = 0
    recovered: int = 0
    sentinels: int = 0
    wall_time: float = 0.0
    statuses: Counter = field(default_factory=Counter)
    errors: list = field(default_factory=list)


@dataclass
class RunTracker:
    """Tracks per-method outcomes across the trials of a run."""

    threshold: float = 1e-5              # Error below which a fit counts as recovered
    _methods: Dict[str, _MethodBucket] = field(default_factory=dict, repr=False)
    _start_ts: float = field(default_factory=time.time, repr=False)

    # --- Recording ---

    def record(self, method: str, status: str, error: float, wall_time: float = 0.0) -> None:
        """Record one fit.

        Args:
            method: 'ce' or 'lspa'.
            status: Solver or convergence status string.
            error: Normalized error, inf when no estimate was produced.
            wall_time: Seconds spent in the fit.
        """
        bucket = self._methods.setdefault(method, _MethodBucket())
        bucket.fits += 1
        bucket.wall_time += wall_time
        bucket.statuses[status] += 1
        if math.isfinite(error):
            bucket.errors.append(error)
            if error < self.threshold:
                bucket.recovered += 1
        else:
            bucket.sentinels += 1

    # --- Aggregates ---

    @property
    def total_fits(self) -> int:
        return sum(b.fits for b in self._methods.values())

    def recovery_rate(self, method: str) -> float:
        bucket = self._methods.get(method)
        if not bucket or not bucket.fits:
            return 0.0
        return bucket.recovered / bucket.fits

    def get_summary(self) -> dict:
        """Return per-method metrics as a dict."""
        out = {}
        for method, b in sorted(self._methods.items()):
            out[method] = {
                "fits": b.fits,
                "recovered": b.recovered,
                "recovery_rate": round(self.recovery_rate(method), 4),
                "sentinels": b.sentinels,
                "median_error": float(np.median(b.errors)) if b.errors else None,
                "wall_time": round(b.wall_time, 3),
                "statuses": dict(sorted(b.statuses.items())),
            }
        return out

    def log_metrics(self, logger: logging.Logger, elapsed: Optional[float] = None) -> None:
        """Print formatted summary to logger."""
        elapsed = time.time() - self._start_ts if elapsed is None else elapsed
        logger.info("=" * 50)
        logger.info("RUN SUMMARY")
        logger.info("=" * 50)
        logger.info(f"  Fits:         {self.total_fits}")
        for method, s in self.get_summary().items():
            statuses = ", ".join(f"{k}: {v}" for k, v in s["statuses"].items())
            logger.info(f"  {method.upper():<5} fits: {s['fits']}  "
                        f"recovered: {s['recovered']} ({s['recovery_rate']:.1%})  "
                        f"sentinels: {s['sentinels']}")
            logger.info(f"        statuses: {statuses}  fit time: {s['wall_time']:.1f}s")
        logger.info(f"  Elapsed:      {elapsed:.1f}s")
        logger.info("=" * 50)
