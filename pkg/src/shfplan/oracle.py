"""Independent verification bounds that sandwich the planner's optimum.

Upper side: for simplex weights lam, min_k E_k <= sum_k lam_k E_k for every
trajectory, and the weighted sum is maximised by a grid path found exactly by
dynamic programming. Any speed-feasible continuous trajectory snaps onto the
grid with position error at most dx/2 per slot (path-following rounding keeps
the per-step cell move within V*dt/dx), so the DP value plus a Lipschitz
slack certifies an upper bound on the achievable min-energy.

Lower side: every feasible quantized trajectory's exact energy lower-bounds
the optimum; multistart SCA supplies a strong feasible point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .baselines import QuantizedTrajectory, random_quantized_init, sca_refine
from .model import SystemParams, Topology, power_slope_bound
from .weighted import SimplexWeights

__all__ = ["GridSpec", "dp_weighted_max", "dp_certified_slack", "multistart_lower_bound"]

CELL_CAP = 100_000_000


@dataclass(frozen=True)
class GridSpec:
    """Position/time grid for the DP certificate.

    dx    cell width (m); rewards are evaluated at cell midpoints
    dt    slot length (s)
    span  position range; must cover all nodes, and V*dt/dx must be a
          positive integer so grid paths land on grid cells
    """

    dx: float
    dt: float
    span: tuple

    def __post_init__(self):
        if self.dx <= 0.0 or self.dt <= 0.0:
            raise ValueError("dx and dt must be positive")
        lo, hi = float(self.span[0]), float(self.span[1])
        if lo >= hi:
            raise ValueError("span must have positive width")
        object.__setattr__(self, "span", (lo, hi))

    def moves_per_step(self, params: SystemParams) -> int:
        c = params.max_speed * self.dt / self.dx
        ci = int(round(c))
        if ci < 1 or abs(c - ci) > 1e-9:
            raise ValueError(f"V*dt/dx must be a positive integer, got {c!r}")
        return ci

    def cells(self) -> int:
        lo, hi = self.span
        return max(1, int(round((hi - lo) / self.dx)))

    def steps(self, params: SystemParams) -> int:
        n = int(round(params.duration / self.dt))
        if n < 1:
            raise ValueError("dt leaves no time steps")
        return n


def dp_weighted_max(params: SystemParams, topo: Topology,
                    weights: SimplexWeights, grid: GridSpec) -> float:
    """Exact max over grid paths of the weighted energy (J).

    Free endpoints, per-step move of at most V*dt/dx cells, reward F(cell
    midpoint)*dt per step. Adding dp_certified_slack turns this into a
    rigorous upper bound on any feasible trajectory's weighted energy, hence
    on the achievable min-energy when the weights are (near) dual optimal.
    """
    if weights.k != topo.k:
        raise ValueError("weight count must match node count")
    lo, hi = grid.span
    if lo > topo.positions[0] + 1e-12 or hi < topo.positions[-1] - 1e-12:
        raise ValueError("grid span must cover all node positions")
    ncells = grid.cells()
    nsteps = grid.steps(params)
    if ncells * nsteps > CELL_CAP:
        raise ValueError(
            f"grid too large: {ncells} cells x {nsteps} steps exceeds {CELL_CAP}"
        )
    cmax = grid.moves_per_step(params)
    mid = lo + (np.arange(ncells) + 0.5) * ((hi - lo) / ncells)
    w = topo.as_array()
    h2 = params.altitude ** 2
    reward = np.zeros(ncells)
    for k in range(topo.k):
        reward += weights.values[k] * params.gain / ((mid - w[k]) ** 2 + h2)
    reward *= grid.dt
    return float(_kernels.dp_weighted_max(reward, nsteps, cmax))


def dp_certified_slack(params: SystemParams, grid: GridSpec) -> float:
    """Discretisation slack of the DP certificate (J).

    A feasible trajectory sampled at slot midpoints moves at most V*dt per
    slot and deviates at most V*dt/2 within a slot; path-following rounding
    to cell midpoints adds at most dx/2. With L the global slope bound of the
    received power (convex weights keep it for F), the weighted energy of any
    trajectory exceeds its snapped grid path's by at most
    T * L * (dx + V*dt) / 2.
    """
    lip = power_slope_bound(params)
    return params.duration * lip * (grid.dx + params.max_speed * grid.dt) / 2.0


def multistart_lower_bound(params: SystemParams, topo: Topology, dt: float,
                           restarts: int, seed: int) -> float:
    """Best exact min-energy over SCA runs from random feasible starts (J).

    Every run's result realises a feasible trajectory, so the best value is a
    valid lower bound on the optimum.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    best = -math.inf
    for _ in range(restarts):
        init = random_quantized_init(params, topo, dt, rng)
        _, energies, _ = sca_refine(params, topo, dt, init=init)
        best = max(best, float(energies.min()))
    return best
