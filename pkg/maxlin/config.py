"""
maxlin configuration.

Dataclass parameter groups with environment overrides (``MAXLIN_*``) and
JSON experiment configs for the grid harness.
"""

import json
import os
from dataclasses import dataclass, field, asdict
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

from dotenv import load_dotenv

_env_path = Path(__file__).parent / '.env'
if _env_path.exists():
    load_dotenv(_env_path)


class ConfigError(ValueError):
    """Invalid configuration value or config file."""


class TruthKind(str, Enum):
    BASIS = "basis"
    GAUSSIAN = "gaussian"

    @classmethod
    def _missing_(cls, value):
        if value == "standard_basis":
            return cls.BASIS
        return None


class GridMode(str, Enum):
    FIX_K_VARY_P = "fix_k_vary_p"
    FIX_P_VARY_K = "fix_p_vary_k"
    NOISE_SWEEP = "noise_sweep"


class Method(str, Enum):
    CE = "ce"
    LSPA = "lspa"


@dataclass
class SolverParams:
    """Revised simplex settings."""
    tol: float = 1e-9               # Feasibility and reduced-cost tolerance
    refactor_every: int = 50        # Pivots between basis refactorizations
    bland_after: int = 200          # Degenerate pivots before Bland's rule
    iteration_factor: int = 50      # Cap = factor * (rows + cols)

    def __post_init__(self):
        if self.tol <= 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.refactor_every < 1 or self.bland_after < 1 or self.iteration_factor < 1:
            raise ConfigError("refactor_every, bland_after and iteration_factor must be >= 1")


@dataclass
class MonteCarloParams:
    """Sample counts for the theory diagnostics."""
    samples: int = 10 ** 6          # Gaussian draws per probability estimate
    directions: int = 10 ** 4       # Random unit directions for inf/sup searches
    chunk_size: int = 2 ** 15       # Draws held in memory at once
    seed: int = 0


@dataclass
class SynthConfig:
    """One synthetic instance: sizes, truth kind, noise, perturbation, seed."""
    n: int
    p: int
    k: int
    truth_kind: TruthKind = TruthKind.BASIS
    sigma: float = 0.0
    perturbation_scale: Optional[float] = None  # None -> 1/(1000kp)
    seed: int = 0
    constant_column: bool = False   # Last regressor coordinate fixed to 1

    def __post_init__(self):
        self.truth_kind = TruthKind(self.truth_kind)
        for name in ("n", "p", "k"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if self.perturbation_scale is None:
            self.perturbation_scale = 1.0 / (1000.0 * self.k * self.p)
        if self.perturbation_scale < 0:
            raise ConfigError(f"perturbation_scale must be >= 0, got {self.perturbation_scale}")
        if self.truth_kind is TruthKind.BASIS and self.k > self.p:
            raise ConfigError(f"basis truth needs k <= p (k={self.k}, p={self.p})")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SynthConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**data)


def _strictly_increasing(values: Sequence[float]) -> bool:
    return all(a < b for a, b in zip(values, values[1:]))


@dataclass
class GridConfig:
    """Phase-transition or noise-sweep grid.

    ``axis_values`` holds the p values (fix_k_vary_p), the k values
    (fix_p_vary_k) or the sigma values (noise_sweep).
    """
    mode: GridMode
    fixed_k: int = 3
    fixed_p: int = 10
    n_values: Tuple[int, ...] = (50, 100, 200, 400, 800)
    axis_values: Tuple[float, ...] = (4, 8)
    sigma: float = 0.0              # Ignored in noise_sweep mode
    trials: int = 50
    truth_kind: TruthKind = TruthKind.BASIS
    master_seed: int = 0
    methods: Tuple[Method, ...] = (Method.CE,)
    max_iter: int = 200             # LSPA iteration cap
    threshold: float = 1e-5         # Recovery threshold for boundaries

    def __post_init__(self):
        self.mode = GridMode(self.mode)
        self.truth_kind = TruthKind(self.truth_kind)
        self.methods = tuple(Method(m) for m in self.methods)
        self.n_values = tuple(int(n) for n in self.n_values)
        if self.mode is GridMode.NOISE_SWEEP:
            self.axis_values = tuple(float(s) for s in self.axis_values)
        else:
            self.axis_values = tuple(int(v) for v in self.axis_values)

        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("methods must not repeat")
        for name in ("n_values", "axis_values"):
            values = getattr(self, name)
            if not values:
                raise ConfigError(f"{name} must be nonempty")
            if not _strictly_increasing(values):
                raise ConfigError(f"{name} must be strictly increasing, got {list(values)}")
        if min(self.n_values) < 1:
            raise ConfigError("n values must be >= 1")
        if self.mode is GridMode.NOISE_SWEEP:
            if min(self.axis_values) < 0:
                raise ConfigError("sigma values must be >= 0")
        elif min(self.axis_values) < 1:
            raise ConfigError("p/k axis values must be >= 1")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if self.truth_kind is TruthKind.BASIS:
            worst_k, worst_p = max(self.k_values), min(self.p_values)
            if worst_k > worst_p:
                raise ConfigError(f"basis truth needs k <= p (k={worst_k}, p={worst_p})")

    @property
    def k_values(self) -> Tuple[int, ...]:
        if self.mode is GridMode.FIX_P_VARY_K:
            return tuple(self.axis_values)
        return (self.fixed_k,)

    @property
    def p_values(self) -> Tuple[int, ...]:
        if self.mode is GridMode.FIX_K_VARY_P:
            return tuple(self.axis_values)
        return (self.fixed_p,)

    @property
    def column_name(self) -> str:
        return {GridMode.FIX_K_VARY_P: "p",
                GridMode.FIX_P_VARY_K: "k",
                GridMode.NOISE_SWEEP: "sigma"}[self.mode]

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GridConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown grid config keys: {sorted(unknown)}")
        if "mode" not in data:
            raise ConfigError("grid config needs a 'mode'")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "GridConfig":
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["mode"] = self.mode.value
        out["truth_kind"] = self.truth_kind.value
        out["methods"] = [m.value for m in self.methods]
        out["n_values"] = list(self.n_values)
        out["axis_values"] = list(self.axis_values)
        return out


@dataclass
class AppConfig:
    """Process-wide settings read from the environment."""
    log_level: str = "INFO"
    log_file: str = ""
    workers: int = 1
    output_dir: str = "results"
    solver: SolverParams = field(default_factory=SolverParams)
    monte_carlo: MonteCarloParams = field(default_factory=MonteCarloParams)

    @classmethod
    def load(cls) -> "AppConfig":
        """Load config from environment."""

        def gf(key, default):
            return float(os.getenv(f"MAXLIN_{key}", str(default)))

        try:
            solver = SolverParams(
                tol=gf("LP_TOL", 1e-9),
                refactor_every=int(gf("LP_REFACTOR", 50)),
                bland_after=int(gf("LP_BLAND_AFTER", 200)),
                iteration_factor=int(gf("LP_ITER_FACTOR", 50)),
            )
            monte_carlo = MonteCarloParams(
                samples=int(gf("MC_SAMPLES", 10 ** 6)),
                directions=int(gf("MC_DIRECTIONS", 10 ** 4)),
                chunk_size=int(gf("MC_CHUNK", 2 ** 15)),
            )
            workers = int(gf("WORKERS", 1))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad MAXLIN_* environment value: {exc}") from exc

        return cls(
            log_level=os.getenv("MAXLIN_LOG_LEVEL", "INFO"),
            log_file=os.getenv("MAXLIN_LOG_FILE", ""),
            workers=max(1, workers),
            output_dir=os.getenv("MAXLIN_OUTPUT_DIR", "results"),
            solver=solver,
            monte_carlo=monte_carlo,
        )
