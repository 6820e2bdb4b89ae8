"""
Monte Carlo diagnostics for the anchored estimator.

All Gaussian expectations are estimated from chunked draws g ~ N(0, I_p);
chunk c comes from its own stream seeded with derive_seed(seed, c), so
results depend only on (seed, N, chunk_size) and chunks can be merged by
summation.

- cone masses P(C_j), symmetric and one-sided mismatch masses
- ζ = min_j √(π/32) P(C_j)² - 2 max_j √P(C̃_j Δ C_j), delta-method error
- ϱ by direction search (an approximation: reported inf is an upper
  estimate of the true inf, reported sups are lower estimates)
- analytic bounds, empirical processes V_z, Q_z, U_z
- sample-size threshold and noise error bound
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, asdict
from typing import Any, Callable, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from maxlin.core.model import DimensionError, ParamBlocks, assign_cones
from maxlin.core.synth import GaussianStream, derive_seed

logger = logging.getLogger(__name__)

SQRT_PI_OVER_32 = math.sqrt(math.pi / 32.0)
DEFAULT_CHUNK = 2 ** 15
DIRECTION_STREAM = 2 ** 63
# Bound on chunk_rows × directions held at once in direction searches
_PRODUCT_BUDGET = 2 ** 22


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: float
    std_error: float
    samples: int
    seed: int
    directions: int = 0          # Directions searched (0: not a direction search)
    approximate: bool = False

    def __post_init__(self):
        if self.std_error < 0 or self.samples < 1:
            raise ValueError("std_error must be >= 0 and samples >= 1")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class MassBounds(NamedTuple):
    inf_lower: float
    sup_upper: float
    sup_upper_tight: float


# ---------------------------------------------------------------------------
# Sampling helpers
# ---------------------------------------------------------------------------

def gaussian_chunks(p: int, N: int, seed: int, chunk_size: int = DEFAULT_CHUNK) -> Iterator[np.ndarray]:
    """Yield N standard Gaussian draws in R^p, chunk by chunk."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    for c, start in enumerate(range(0, N, chunk_size)):
        rows = min(chunk_size, N - start)
        yield GaussianStream(derive_seed(seed, c)).standard_normal((rows, p))


def random_directions(p: int, count: int, seed: int) -> np.ndarray:
    """(count, p) uniformly distributed unit vectors."""
    if count < 1:
        return np.zeros((0, p))
    W = GaussianStream(derive_seed(seed, DIRECTION_STREAM)).standard_normal((count, p))
    return W / np.linalg.norm(W, axis=1, keepdims=True)


def candidate_directions(*betas: ParamBlocks) -> np.ndarray:
    """Unit directions tied to the cone geometry.

    Blocks, pairwise block differences (facet normals) with both signs
    and, for p = 2, their quarter-turn rotations (the wedge edges and
    bisector normals).
    """
    vecs = []
    for beta in betas:
        B = beta.blocks
        for j in range(beta.k):
            vecs.append(B[j])
            for l in range(beta.k):
                if l != j:
                    vecs.append(B[j] - B[l])
    V = np.array(vecs, dtype=np.float64)
    if V.shape[1] == 2:
        V = np.vstack([V, V[:, ::-1] * np.array([-1.0, 1.0])])
    V = np.vstack([V, -V])
    norms = np.linalg.norm(V, axis=1)
    V = V[norms > 1e-12] / norms[norms > 1e-12, None]
    return np.unique(np.round(V, 15), axis=0)


def _check_pair(beta_star: ParamBlocks, beta_tilde: ParamBlocks) -> None:
    if (beta_star.k, beta_star.p) != (beta_tilde.k, beta_tilde.p):
        raise DimensionError(f"block shapes differ: ({beta_star.k}, {beta_star.p}) "
                             f"vs ({beta_tilde.k}, {beta_tilde.p})")


def _bernoulli(successes: float, N: int, seed: int) -> MonteCarloEstimate:
    phat = successes / N
    return MonteCarloEstimate(float(phat), math.sqrt(max(phat * (1.0 - phat), 0.0) / N), N, seed)


# ---------------------------------------------------------------------------
# Cone masses
# ---------------------------------------------------------------------------

@dataclass
class _MembershipCounts:
    N: int
    seed: int
    cone: np.ndarray            # g in C_j
    symdiff: np.ndarray         # membership in C_j and C̃_j disagrees
    added: np.ndarray           # g in C̃_j minus C_j
    removed: np.ndarray         # g in C_j minus C̃_j


def _membership_counts(beta_star: ParamBlocks, beta_tilde: ParamBlocks, N: int, seed: int,
                       chunk_size: int = DEFAULT_CHUNK) -> _MembershipCounts:
    _check_pair(beta_star, beta_tilde)
    k = beta_star.k
    counts = _MembershipCounts(N, seed, np.zeros(k), np.zeros(k), np.zeros(k), np.zeros(k))
    for G in gaussian_chunks(beta_star.p, N, seed, chunk_size):
        a = assign_cones(G, beta_star)
        b = assign_cones(G, beta_tilde)
        counts.cone += np.bincount(a, minlength=k)
        differ = a != b
        counts.removed += np.bincount(a[differ], minlength=k)
        counts.added += np.bincount(b[differ], minlength=k)
    counts.symdiff = counts.added + counts.removed
    return counts


def mc_cone_probabilities(beta: ParamBlocks, N: int, seed: int,
                          chunk_size: int = DEFAULT_CHUNK) -> List[MonteCarloEstimate]:
    counts = _membership_counts(beta, beta, N, seed, chunk_size)
    return [_bernoulli(c, N, seed) for c in counts.cone]


def mc_cone_probability(beta: ParamBlocks, j: int, N: int, seed: int,
                        chunk_size: int = DEFAULT_CHUNK) -> MonteCarloEstimate:
    if not 0 <= j < beta.k:
        raise IndexError(f"component {j} out of range for k={beta.k}")
    return mc_cone_probabilities(beta, N, seed, chunk_size)[j]


def mc_symdiff_probability(beta_star: ParamBlocks, beta_tilde: ParamBlocks, j: int, N: int,
                           seed: int, chunk_size: int = DEFAULT_CHUNK) -> MonteCarloEstimate:
    if not 0 <= j < beta_star.k:
        raise IndexError(f"component {j} out of range for k={beta_star.k}")
    counts = _membership_counts(beta_star, beta_tilde, N, seed, chunk_size)
    return _bernoulli(counts.symdiff[j], N, seed)


def mc_setdiff_probabilities(beta_star: ParamBlocks, beta_tilde: ParamBlocks, N: int, seed: int,
                             chunk_size: int = DEFAULT_CHUNK
                             ) -> Tuple[List[MonteCarloEstimate], List[MonteCarloEstimate]]:
    """Per-cone masses of C̃_j minus C_j and of C_j minus C̃_j."""
    counts = _membership_counts(beta_star, beta_tilde, N, seed, chunk_size)
    return ([_bernoulli(c, N, seed) for c in counts.added],
            [_bernoulli(c, N, seed) for c in counts.removed])


def _zeta_from_counts(counts: _MembershipCounts) -> MonteCarloEstimate:
    N = counts.N
    P = counts.cone / N
    D = counts.symdiff / N
    j_min = int(np.argmin(P))
    j_max = int(np.argmax(D))
    value = SQRT_PI_OVER_32 * P[j_min] ** 2 - 2.0 * math.sqrt(D[j_max])

    se_p = math.sqrt(P[j_min] * (1.0 - P[j_min]) / N)
    se_d = math.sqrt(D[j_max] * (1.0 - D[j_max]) / N)
    grad_p = 2.0 * SQRT_PI_OVER_32 * P[j_min] * se_p
    grad_d = se_d / math.sqrt(D[j_max]) if D[j_max] > 0 else 0.0
    return MonteCarloEstimate(float(value), math.hypot(grad_p, grad_d), N, counts.seed)


def zeta(beta_star: ParamBlocks, beta_tilde: ParamBlocks, N: int, seed: int,
         chunk_size: int = DEFAULT_CHUNK) -> MonteCarloEstimate:
    """Plug-in ζ with a delta-method standard error (extremal terms only)."""
    return _zeta_from_counts(_membership_counts(beta_star, beta_tilde, N, seed, chunk_size))


def mass_bounds(prob: float) -> MassBounds:
    """Analytic bounds for a region of Gaussian mass ``prob``.

    inf_w E 1_A |<g, w>| >= √(π/32) prob² and sup_w E 1_A <g, w>_+ <= √prob;
    the sharper √(prob/2) is returned as ``sup_upper_tight``.
    """
    prob = float(prob)
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"prob must lie in [0, 1], got {prob}")
    return MassBounds(SQRT_PI_OVER_32 * prob ** 2, math.sqrt(prob), math.sqrt(prob / 2.0))


def varrho_lower_bound(probs: Sequence[float], added: Sequence[float],
                       removed: Sequence[float]) -> float:
    """Lower bound on ϱ from the mass bounds applied term by term."""
    inf_term = min(mass_bounds(p).inf_lower for p in probs)
    return inf_term - max(math.sqrt(a) for a in added) - max(math.sqrt(r) for r in removed)


# ---------------------------------------------------------------------------
# Direction searches
# ---------------------------------------------------------------------------

@dataclass
class RegionMoments:
    """Per-direction means and standard errors over one region."""
    abs_mean: np.ndarray     # E 1_A |<g, w>|
    abs_se: np.ndarray
    pos_mean: np.ndarray     # E 1_A <g, w>_+
    pos_se: np.ndarray
    probability: MonteCarloEstimate
    directions: np.ndarray = field(repr=False)


class _MomentSums:
    def __init__(self, regions: int, directions: int):
        self.abs_sum = np.zeros((regions, directions))
        self.abs_sq = np.zeros((regions, directions))
        self.pos_sum = np.zeros((regions, directions))
        self.pos_sq = np.zeros((regions, directions))
        self.hits = np.zeros(regions)

    def add(self, G: np.ndarray, W: np.ndarray, masks: np.ndarray) -> None:
        """masks: (regions, rows) 0/1 matrix."""
        step = max(1, _PRODUCT_BUDGET // max(1, W.shape[0]))
        self.hits += masks.sum(axis=1)
        for start in range(0, G.shape[0], step):
            dots = G[start:start + step] @ W.T
            M = masks[:, start:start + step]
            absd = np.abs(dots)
            posd = np.maximum(dots, 0.0)
            self.abs_sum += M @ absd
            self.abs_sq += M @ absd ** 2
            self.pos_sum += M @ posd
            self.pos_sq += M @ posd ** 2

    def moments(self, r: int, N: int):
        def mean_se(total, squares):
            mean = total[r] / N
            var = np.maximum(squares[r] / N - mean ** 2, 0.0)
            return mean, np.sqrt(var / N)
        return mean_se(self.abs_sum, self.abs_sq) + mean_se(self.pos_sum, self.pos_sq)


def mc_region_moments(region: Callable[[np.ndarray], np.ndarray], p: int, directions: np.ndarray,
                      N: int, seed: int, chunk_size: int = DEFAULT_CHUNK) -> RegionMoments:
    """Moments of 1_A(g)|<g, w>| and 1_A(g)<g, w>_+ for each direction w.

    Args:
        region: Maps an (rows, p) sample to a boolean membership mask.
        p: Dimension.
        directions: (M, p) unit vectors.
        N: Gaussian draws.
        seed: Master seed of the draw streams.
        chunk_size: Draws per stream.
    """
    W = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    if W.shape[1] != p:
        raise DimensionError(f"directions must have {p} columns, got {W.shape}")
    sums = _MomentSums(1, W.shape[0])
    for G in gaussian_chunks(p, N, seed, chunk_size):
        sums.add(G, W, np.asarray(region(G), dtype=np.float64)[None, :])
    abs_mean, abs_se, pos_mean, pos_se = sums.moments(0, N)
    return RegionMoments(abs_mean, abs_se, pos_mean, pos_se, _bernoulli(sums.hits[0], N, seed), W)


def mc_inf_abs_expectation(moments: RegionMoments) -> MonteCarloEstimate:
    i = int(np.argmin(moments.abs_mean))
    return MonteCarloEstimate(float(moments.abs_mean[i]), float(moments.abs_se[i]),
                              moments.probability.samples, moments.probability.seed,
                              directions=moments.directions.shape[0], approximate=True)


def mc_sup_pos_expectation(moments: RegionMoments) -> MonteCarloEstimate:
    i = int(np.argmax(moments.pos_mean))
    return MonteCarloEstimate(float(moments.pos_mean[i]), float(moments.pos_se[i]),
                              moments.probability.samples, moments.probability.seed,
                              directions=moments.directions.shape[0], approximate=True)


def varrho_mc(beta_star: ParamBlocks, beta_tilde: ParamBlocks, N_g: int, M_w: int, seed: int,
              directions: Optional[np.ndarray] = None,
              chunk_size: int = DEFAULT_CHUNK) -> MonteCarloEstimate:
    """Direction-search estimate of ϱ.

    ϱ = min_j inf_w E 1_{C_j}|<g,w>| - max_j sup_w E 1_{C̃_j∖C_j}<g,w>_+
        - max_j sup_w E 1_{C_j∖C̃_j}<g,w>_+

    Directions are M_w random unit vectors (or ``directions`` when given)
    plus the candidate directions of both parameter sets.
    """
    _check_pair(beta_star, beta_tilde)
    if N_g < 1 or M_w < 1:
        raise ValueError("N_g and M_w must be >= 1")
    k, p = beta_star.k, beta_star.p
    base = random_directions(p, M_w, seed) if directions is None else np.asarray(directions, dtype=np.float64)
    W = np.vstack([base, candidate_directions(beta_star, beta_tilde)])

    sums = _MomentSums(3 * k, W.shape[0])
    comps = np.arange(k)[:, None]
    for G in gaussian_chunks(p, N_g, seed, chunk_size):
        a = assign_cones(G, beta_star)[None, :]
        b = assign_cones(G, beta_tilde)[None, :]
        in_star = a == comps
        in_tilde = b == comps
        masks = np.vstack([in_star, in_tilde & ~in_star, in_star & ~in_tilde]).astype(np.float64)
        sums.add(G, W, masks)

    inf_best = (np.inf, 0.0)
    sup_added = (-np.inf, 0.0)
    sup_removed = (-np.inf, 0.0)
    for j in range(k):
        abs_mean, abs_se, _, _ = sums.moments(j, N_g)
        i = int(np.argmin(abs_mean))
        if abs_mean[i] < inf_best[0]:
            inf_best = (float(abs_mean[i]), float(abs_se[i]))
        _, _, pos_mean, pos_se = sums.moments(k + j, N_g)
        i = int(np.argmax(pos_mean))
        if pos_mean[i] > sup_added[0]:
            sup_added = (float(pos_mean[i]), float(pos_se[i]))
        _, _, pos_mean, pos_se = sums.moments(2 * k + j, N_g)
        i = int(np.argmax(pos_mean))
        if pos_mean[i] > sup_removed[0]:
            sup_removed = (float(pos_mean[i]), float(pos_se[i]))

    value = inf_best[0] - sup_added[0] - sup_removed[0]
    se = math.sqrt(inf_best[1] ** 2 + sup_added[1] ** 2 + sup_removed[1] ** 2)
    logger.debug("varrho terms: inf %.5f, sup(added) %.5f, sup(removed) %.5f over %d directions",
                 inf_best[0], sup_added[0], sup_removed[0], W.shape[0])
    return MonteCarloEstimate(value, se, N_g, seed, directions=W.shape[0], approximate=True)


# ---------------------------------------------------------------------------
# Empirical processes
# ---------------------------------------------------------------------------

def _component_dots(X, beta_star: ParamBlocks, z: ParamBlocks) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != beta_star.p:
        raise DimensionError(f"X must have shape (n, {beta_star.p}), got {X.shape}")
    if (z.k, z.p) != (beta_star.k, beta_star.p):
        raise DimensionError("z must have the same block shape as beta_star")
    return X @ z.blocks.T


def empirical_V(X, beta_star: ParamBlocks, z: ParamBlocks,
                beta_tilde: Optional[ParamBlocks] = None) -> float:
    """(1/n) Σ_i Σ_j 1_{C_j}(x_i) |<x_i, z_j>|.

    With ``beta_tilde`` the indicator becomes 1_{C_j ∪ C̃_j}, which bounds
    |empirical_Q| for the same pair.
    """
    dots = _component_dots(X, beta_star, z)
    rows = np.arange(dots.shape[0])
    a = assign_cones(X, beta_star)
    total = np.abs(dots[rows, a])
    if beta_tilde is not None:
        _check_pair(beta_star, beta_tilde)
        b = assign_cones(X, beta_tilde)
        total = total + np.where(b != a, np.abs(dots[rows, b]), 0.0)
    return float(np.mean(total))


def empirical_Q(X, beta_star: ParamBlocks, beta_tilde: ParamBlocks, z: ParamBlocks) -> float:
    """(1/n) Σ_i Σ_j (1_{C̃_j}(x_i) - 1_{C_j}(x_i)) <x_i, z_j>."""
    _check_pair(beta_star, beta_tilde)
    dots = _component_dots(X, beta_star, z)
    rows = np.arange(dots.shape[0])
    a = assign_cones(X, beta_star)
    b = assign_cones(X, beta_tilde)
    return float(np.mean(dots[rows, b] - dots[rows, a]))


def empirical_U(X, beta_star: ParamBlocks, z: ParamBlocks) -> float:
    """(1/n) Σ_i Σ_j 1_{C_j}(x_i) <x_i, z_j>_+."""
    dots = _component_dots(X, beta_star, z)
    a = assign_cones(X, beta_star)
    return float(np.mean(np.maximum(dots[np.arange(dots.shape[0]), a], 0.0)))


# ---------------------------------------------------------------------------
# Sample complexity and error bound
# ---------------------------------------------------------------------------

def sample_complexity_threshold(p: int, k: int, delta: float, zeta: float, c: float = 1.0) -> int:
    """⌈c ζ⁻² (4p log³p log⁵k + 4 log(1/δ) log k)⌉, each log floored at 1."""
    if zeta <= 0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if c <= 0 or p < 1 or k < 1:
        raise ValueError("c must be positive and p, k >= 1")
    log_p = max(math.log(p), 1.0)
    log_k = max(math.log(k), 1.0)
    core = 4.0 * p * log_p ** 3 * log_k ** 5 + 4.0 * math.log(1.0 / delta) * log_k
    return int(math.ceil(c * core / zeta ** 2))


def error_bound_rhs(zeta: float, w) -> float:
    """(2 / (ζ n)) Σ |w_i|."""
    if zeta <= 0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.size == 0:
        raise ValueError("w must be non-empty")
    return float(2.0 / (zeta * w.size) * np.abs(w).sum())


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

@dataclass
class TheoryReport:
    k: int
    p: int
    samples: int
    seed: int
    cone_probabilities: List[MonteCarloEstimate]
    symdiff_probabilities: List[MonteCarloEstimate]
    added_probabilities: List[MonteCarloEstimate]
    removed_probabilities: List[MonteCarloEstimate]
    pi_min: float
    zeta_hat: MonteCarloEstimate
    mass_bounds: List[MassBounds]
    varrho_lower_bound: float
    varrho_hat: Optional[MonteCarloEstimate] = None
    delta: float = 0.05
    c: float = 1.0
    sample_complexity: Optional[int] = None    # None when ζ̂ <= 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "p": self.p,
            "samples": self.samples,
            "seed": self.seed,
            "cone_probabilities": [e.to_dict() for e in self.cone_probabilities],
            "symdiff_probabilities": [e.to_dict() for e in self.symdiff_probabilities],
            "added_probabilities": [e.to_dict() for e in self.added_probabilities],
            "removed_probabilities": [e.to_dict() for e in self.removed_probabilities],
            "pi_min": self.pi_min,
            "zeta_hat": self.zeta_hat.to_dict(),
            "varrho_hat": self.varrho_hat.to_dict() if self.varrho_hat else None,
            "varrho_lower_bound": self.varrho_lower_bound,
            "mass_bounds": [b._asdict() for b in self.mass_bounds],
            "delta": self.delta,
            "c": self.c,
            "sample_complexity": self.sample_complexity,
        }


def build_theory_report(beta_star: ParamBlocks, beta_tilde: ParamBlocks, samples: int = 10 ** 6,
                        seed: int = 0, delta: float = 0.05, c: float = 1.0,
                        directions: Optional[int] = None,
                        chunk_size: int = DEFAULT_CHUNK) -> TheoryReport:
    """Every diagnostic for one (β⋆, β̃) pair; ϱ̂ only when ``directions`` is set."""
    counts = _membership_counts(beta_star, beta_tilde, samples, seed, chunk_size)
    cone = [_bernoulli(x, samples, seed) for x in counts.cone]
    symdiff = [_bernoulli(x, samples, seed) for x in counts.symdiff]
    added = [_bernoulli(x, samples, seed) for x in counts.added]
    removed = [_bernoulli(x, samples, seed) for x in counts.removed]
    zeta_hat = _zeta_from_counts(counts)

    threshold = None
    if zeta_hat.value > 0:
        threshold = sample_complexity_threshold(beta_star.p, beta_star.k, delta, zeta_hat.value, c)
    else:
        logger.warning("zeta estimate %.4f <= 0: recovery guarantee does not apply", zeta_hat.value)

    varrho_hat = None
    if directions:
        varrho_hat = varrho_mc(beta_star, beta_tilde, samples, directions, seed, chunk_size=chunk_size)

    return TheoryReport(
        k=beta_star.k,
        p=beta_star.p,
        samples=samples,
        seed=seed,
        cone_probabilities=cone,
        symdiff_probabilities=symdiff,
        added_probabilities=added,
        removed_probabilities=removed,
        pi_min=min(e.value for e in cone),
        zeta_hat=zeta_hat,
        mass_bounds=[mass_bounds(e.value) for e in cone],
        varrho_lower_bound=varrho_lower_bound([e.value for e in cone],
                                              [e.value for e in added],
                                              [e.value for e in removed]),
        varrho_hat=varrho_hat,
        delta=delta,
        c=c,
        sample_complexity=threshold,
    )
