"""
Closed forms for planar (p = 2) cones.

For a wedge C of angular width θ and g ~ N(0, I_2):

    inf_{|w|=1} E 1_C(g) |<g, w>|  = √(2/π) sin²(θ/4)
    sup_{|w|=1} E 1_C(g) <g, w>_+  = sin(θ/2) / √(2π)

and the margin ϱ of a planar configuration combines the smallest cone
term with the largest terms of the two one-sided mismatch wedges.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# √2·Γ(3/2)/Γ(1) = √(π/2): E|g| for g ~ N(0, I_2) radius
RADIAL_MEAN = math.sqrt(2.0) * math.gamma(1.5) / math.gamma(1.0)


def _check_angle(theta: float, name: str = "theta") -> float:
    theta = float(theta)
    if not 0.0 <= theta <= math.pi:
        raise ValueError(f"{name} must lie in [0, pi], got {theta}")
    return theta


def cone2d_inf_expectation(theta_c: float) -> float:
    theta_c = _check_angle(theta_c, "theta_c")
    return RADIAL_MEAN * (2.0 / math.pi) * math.sin(theta_c / 4.0) ** 2


def cone2d_sup_expectation(theta_c: float) -> float:
    theta_c = _check_angle(theta_c, "theta_c")
    return RADIAL_MEAN * math.sin(theta_c / 2.0) / math.pi


@dataclass(frozen=True)
class PlanarVarrho:
    value: float
    assumption_holds: bool   # min cone mass >= max symmetric-difference mass


def varrho_2d(widths: Sequence[float],
              mismatch_widths: Sequence[Tuple[float, float]]) -> PlanarVarrho:
    """Planar margin from cone widths and per-cone mismatch wedge widths.

    Args:
        widths: Angular width of each cone C_j.
        mismatch_widths: Per cone, (width of C̃_j minus C_j, width of C_j minus C̃_j).

    Returns:
        PlanarVarrho with the margin and whether the mass condition
        min_j P(C_j) >= max_j P(C_j Δ C̃_j) holds.
    """
    widths = [_check_angle(w, "width") for w in widths]
    pairs = [(_check_angle(a, "mismatch"), _check_angle(b, "mismatch")) for a, b in mismatch_widths]
    if not widths:
        raise ValueError("at least one cone width is required")
    if len(pairs) != len(widths):
        raise ValueError(f"need one mismatch pair per cone ({len(widths)}), got {len(pairs)}")

    inf_term = min((2.0 / math.pi) * math.sin(w / 4.0) ** 2 for w in widths)
    sup_plus = max(math.sin(a / 2.0) / math.pi for a, _ in pairs)
    sup_minus = max(math.sin(b / 2.0) / math.pi for _, b in pairs)
    value = RADIAL_MEAN * (inf_term - sup_plus - sup_minus)

    holds = min(widths) / (2.0 * math.pi) >= max(a + b for a, b in pairs) / (2.0 * math.pi)
    if not holds:
        logger.warning("Planar margin: smallest cone mass %.4f below largest mismatch mass %.4f",
                       min(widths) / (2.0 * math.pi), max(a + b for a, b in pairs) / (2.0 * math.pi))
    return PlanarVarrho(value, holds)


def circle_directions(count: int, offset: float = 0.0) -> np.ndarray:
    """(count, 2) unit vectors at equally spaced angles."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    angles = offset + 2.0 * np.pi * np.arange(count) / count
    return np.column_stack([np.cos(angles), np.sin(angles)])

