"""
Seeded synthetic data.

Regressors, ground truths, noise and initial estimates each come from their
own stream, seeded as master seed + a fixed offset, so a change of sigma
leaves X, β⋆ and β̃ untouched.

Gaussian variates use the Marsaglia polar method on PCG64 uniforms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from maxlin.config import SynthConfig, TruthKind
from maxlin.core.model import Dataset, DimensionError, ParamBlocks, evaluate

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1

REGRESSOR_OFFSET = 0
TRUTH_OFFSET = 1
NOISE_OFFSET = 2
PERTURB_OFFSET = 3


class GaussianStream:
    """Standard normal draws from a seeded PCG64 generator."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, size) -> np.ndarray:
        return self._gen.random(size)

    def standard_normal(self, size: Union[int, Sequence[int]]) -> np.ndarray:
        shape = (size,) if np.isscalar(size) else tuple(size)
        count = int(np.prod(shape))
        out = np.empty(count)
        filled = 0
        while filled < count:
            need = count - filled
            # each accepted pair yields two variates; acceptance rate is pi/4
            pairs = need // 2 + 1
            batch = int(pairs * 1.28) + 8
            u = self._gen.random((batch, 2)) * 2.0 - 1.0
            s = u[:, 0] ** 2 + u[:, 1] ** 2
            ok = (s > 0.0) & (s < 1.0)
            u, s = u[ok], s[ok]
            z = (u * np.sqrt(-2.0 * np.log(s) / s)[:, None]).ravel()
            take = min(need, z.size)
            out[filled:filled + take] = z[:take]
            filled += take
        return out.reshape(shape)


def derive_seed(master: int, *keys: int) -> int:
    """Deterministic 64-bit seed for a (master, keys...) tuple."""
    entropy = [int(master) & _MASK64] + [int(k) & _MASK64 for k in keys]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def _stream(config: SynthConfig, offset: int) -> GaussianStream:
    return GaussianStream((config.seed + offset) & _MASK64)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def gen_regressors(config: SynthConfig) -> np.ndarray:
    """n×p i.i.d. standard normal regressors."""
    X = _stream(config, REGRESSOR_OFFSET).standard_normal((config.n, config.p))
    if config.constant_column:
        X[:, -1] = 1.0
    return X


def gen_ground_truth(config: SynthConfig) -> ParamBlocks:
    """Unit-norm ground truth: scaled standard basis or normalized Gaussian."""
    k, p = config.k, config.p
    if config.truth_kind is TruthKind.BASIS:
        if k > p:
            raise ValueError(f"basis truth needs k <= p (k={k}, p={p})")
        return ParamBlocks.from_blocks(np.eye(k, p) / np.sqrt(k))
    flat = _stream(config, TRUTH_OFFSET).standard_normal(k * p)
    return ParamBlocks(flat / np.linalg.norm(flat), k, p)


def perturb_init(beta_star: ParamBlocks, config: SynthConfig) -> ParamBlocks:
    """β̃ = β⋆ + ε with ε ~ N(0, perturbation_scale · I)."""
    if config.perturbation_scale == 0.0:
        return ParamBlocks(beta_star.flat, beta_star.k, beta_star.p)
    eps = _stream(config, PERTURB_OFFSET).standard_normal(beta_star.k * beta_star.p)
    return ParamBlocks(beta_star.flat + np.sqrt(config.perturbation_scale) * eps,
                       beta_star.k, beta_star.p)


def gen_observations(X: np.ndarray, beta_star: ParamBlocks,
                     config: SynthConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Return (y, w) with y = f(X; β⋆) + w and w ~ N(0, sigma²)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != beta_star.p:
        raise DimensionError(f"X must have shape (n, {beta_star.p}), got {X.shape}")
    n = X.shape[0]
    if config.sigma == 0.0:
        w = np.zeros(n)
    else:
        w = config.sigma * _stream(config, NOISE_OFFSET).standard_normal(n)
    return evaluate(X, beta_star) + w, w


def compute_eta(w) -> float:
    """Residual budget (1/n) Σ (-w_i)_+."""
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.size == 0:
        return 0.0
    return float(np.mean(np.maximum(-w, 0.0)))


@dataclass(frozen=True)
class SyntheticInstance:
    """One trial's data, truth, initial estimate and oracle budget."""
    data: Dataset
    beta_star: ParamBlocks
    beta_tilde: ParamBlocks
    eta: float
    config: SynthConfig


def make_instance(config: SynthConfig) -> SyntheticInstance:
    X = gen_regressors(config)
    beta_star = gen_ground_truth(config)
    y, w = gen_observations(X, beta_star, config)
    beta_tilde = perturb_init(beta_star, config)
    eta = compute_eta(w)
    logger.debug("Synthetic instance n=%d p=%d k=%d sigma=%g seed=%d eta=%.3g",
                 config.n, config.p, config.k, config.sigma, config.seed, eta)
    return SyntheticInstance(Dataset(X, y, w), beta_star, beta_tilde, eta, config)
