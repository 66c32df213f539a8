"""Global maximisation of multiplier-weighted received power over a window.

The inner problem of the dual solve: given simplex weights over the nodes,
find every global maximiser of F(x) = sum_k lam_k * q_k(x) on [lo, hi]. F' is
a smooth rational function whose numerator has polynomial degree 4K-3, so F
has at most 4K-3 interior stationary points and at most 2K-1 interior maxima;
adding the two window boundaries caps the maximiser count at 2K+1. Roots are
isolated by scanning F' for sign changes and refined by bisection instead of
expanding the degree-(4K-3) polynomial, whose coefficients grow
catastrophically for realistic positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import SystemParams, Topology

__all__ = [
    "SimplexWeights",
    "MaximizerSet",
    "weighted_power",
    "stationary_points",
    "global_maximizers",
    "default_scan_step",
]

SIMPLEX_TOL = 1e-12
DEFAULT_TIE_TOL = 1e-9
SCAN_LEVELS = 6


@dataclass(frozen=True)
class SimplexWeights:
    """Non-negative node weights summing to one."""

    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=np.float64))
        if v.size == 0:
            raise ValueError("weights must be non-empty")
        if np.any(v < 0.0):
            raise ValueError("weights must be non-negative")
        if abs(v.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"weights must sum to 1 within {SIMPLEX_TOL}, got {v.sum()!r}")
        object.__setattr__(self, "values", v)

    @property
    def k(self) -> int:
        return self.values.size

    @staticmethod
    def uniform(k: int) -> "SimplexWeights":
        return SimplexWeights(np.full(k, 1.0 / k))

    @staticmethod
    def vertex(k: int, index: int) -> "SimplexWeights":
        v = np.zeros(k)
        v[index] = 1.0
        return SimplexWeights(v)


@dataclass(frozen=True)
class MaximizerSet:
    """Tied global maximisers of the weighted power on a window."""

    points: np.ndarray
    value: float
    tie_tolerance: float


def default_scan_step(params: SystemParams, lo: float, hi: float) -> float:
    """Scan resolution for root bracketing: min(altitude, window width)/1000."""
    width = hi - lo
    if width <= 0.0:
        return params.altitude / 1000.0
    return min(params.altitude, width) / 1000.0


def _check_window(lo: float, hi: float):
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("window bounds must be finite")
    if lo > hi:
        raise ValueError(f"window must satisfy lo <= hi, got {(lo, hi)!r}")


def weighted_power(params: SystemParams, topo: Topology, weights: SimplexWeights, x: float) -> float:
    """Convex combination of per-node received powers at position x (W)."""
    if weights.k != topo.k:
        raise ValueError("weight count must match node count")
    return _kernels.f_value(
        topo.as_array(), params.gain, params.altitude ** 2, weights.values, float(x)
    )


def stationary_points(
    params: SystemParams,
    topo: Topology,
    weights: SimplexWeights,
    window,
    scan_step: float | None = None,
) -> np.ndarray:
    """Roots of F' inside the window, to 1e-12 m.

    Sign changes of F' are bracketed on a scan grid and refined by bisection;
    the grid is halved (up to 6 times) whenever two roots fall within two
    steps of each other.
    """
    if weights.k != topo.k:
        raise ValueError("weight count must match node count")
    lo, hi = float(window[0]), float(window[1])
    _check_window(lo, hi)
    step = scan_step if scan_step is not None else default_scan_step(params, lo, hi)
    if step <= 0.0:
        raise ValueError("scan_step must be positive")
    return _kernels.scan_roots(
        topo.as_array(), params.gain, params.altitude ** 2, weights.values,
        lo, hi, step, SCAN_LEVELS,
    )


def global_maximizers(
    params: SystemParams,
    topo: Topology,
    weights: SimplexWeights,
    window,
    tie_tol: float = DEFAULT_TIE_TOL,
    scan_step: float | None = None,
) -> MaximizerSet:
    """All window positions whose F value ties the global maximum.

    Candidates are the interior stationary points plus both boundaries; every
    candidate within relative tie_tol of the best value is returned.
    """
    if weights.k != topo.k:
        raise ValueError("weight count must match node count")
    lo, hi = float(window[0]), float(window[1])
    _check_window(lo, hi)
    if tie_tol < 0.0:
        raise ValueError("tie_tol must be non-negative")
    step = scan_step if scan_step is not None else default_scan_step(params, lo, hi)
    pts, fstar = _kernels.maximizer_candidates(
        topo.as_array(), params.gain, params.altitude ** 2, weights.values,
        lo, hi, step, SCAN_LEVELS, tie_tol,
    )
    return MaximizerSet(points=pts, value=float(fstar), tie_tolerance=tie_tol)
