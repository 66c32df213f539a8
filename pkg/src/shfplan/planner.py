"""Endpoint search: globally optimal trajectory over all window pairs.

The optimal trajectory hovers at finitely many points and flies at max speed
between them, so the search space reduces to the window endpoints (lo, hi)
on a distance grid over the node line. Each window is solved exactly by the
dual method; the best window wins. Two exact accelerations keep the search
fast without giving up global optimality over the grid:

* dominance pruning: the dual value at any feasible weight vector upper
  bounds a window's achievable min-energy, so a single cheap dual probe can
  prove a window cannot beat the incumbent and skip the full solve;
* warm starts: the dual optimum varies smoothly with the window, so each
  full solve starts from the most recent optimum (a bad warm start is caught
  by its duality gap and redone cold).

A coarse pass at d_min followed by a fine pass (resolution `refine`) in a
+-0.5 m neighbourhood of the coarse best reproduces the fine-grid optimum at
a fraction of the cost of the full fine grid; `exhaustive=True` disables the
two-stage shortcut and pruning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dual import (
    DEFAULT_GAP_TOL,
    DualCertificate,
    EllipsoidIterationError,
    WindowProblem,
    WindowSolution,
    solve_window,
)
from .model import SystemParams, Topology
from .trajectory import HoverSchedule, Trajectory, assemble_shf, energy_vector
from .weighted import SCAN_LEVELS, SimplexWeights, default_scan_step

__all__ = [
    "PlannerConfig",
    "GridStats",
    "SolveReport",
    "solve_fixed_endpoints",
    "plan",
    "speed_free_upper_bound",
    "speed_free_solution",
]

# Values within this relative margin of the incumbent survive pruning, which
# keeps exact ties alive for the deterministic tie-break.
PRUNE_REL_MARGIN = 1e-9


@dataclass(frozen=True)
class PlannerConfig:
    """Search configuration.

    d_min        coarse grid resolution (m); the node span is rounded to an
                 integer number of cells of (almost) this size
    refine       fine resolution for the second pass (m); 0 disables it
    refine_radius  half-width of the fine neighbourhood around the coarse best
    gap_tol      certificate tolerance per window solve
    parallel     worker-count hint for sweep harnesses (window solves here
                 run serially; numba parallelism applies within kernels)
    tie_tol      maximiser tie tolerance inside the dual solve
    prune        enable dominance pruning
    exhaustive   solve every feasible coarse window, no pruning, no refine
    """

    d_min: float = 0.25
    refine: float = 0.01
    refine_radius: float = 0.5
    gap_tol: float = DEFAULT_GAP_TOL
    parallel: int = 1
    tie_tol: float = 1e-9
    prune: bool = True
    exhaustive: bool = False

    def __post_init__(self):
        if self.d_min <= 0.0:
            raise ValueError("d_min must be positive")
        if self.refine < 0.0:
            raise ValueError("refine must be non-negative")
        if self.refine_radius <= 0.0:
            raise ValueError("refine_radius must be positive")
        if self.gap_tol <= 0.0:
            raise ValueError("gap_tol must be positive")
        if self.parallel < 1:
            raise ValueError("parallel must be at least 1")


@dataclass
class GridStats:
    evaluated: int = 0
    pruned: int = 0
    infeasible: int = 0
    failed: int = 0
    max_gap: float = 0.0            # worst certificate gap over all solves
    weak_duality_ok: bool = True    # primal <= dual + 1e-12 at every solve

    @property
    def total(self) -> int:
        return self.evaluated + self.pruned + self.infeasible + self.failed

    def record(self, sol: WindowSolution):
        self.max_gap = max(self.max_gap, sol.certificate.gap)
        if not (sol.certificate.primal_value <= sol.certificate.dual_value + 1e-12):
            self.weak_duality_ok = False


@dataclass(frozen=True)
class SolveReport:
    best_window: tuple
    trajectory: Trajectory
    energies: np.ndarray
    min_energy: float
    certificate: DualCertificate
    upper_bound: float
    grid_stats: GridStats


def solve_fixed_endpoints(window, params: SystemParams, topo: Topology,
                          warm: SimplexWeights | None = None,
                          gap_tol: float = DEFAULT_GAP_TOL):
    """Optimal trajectory for a fixed endpoint pair.

    Solves the window's hover allocation, then realises it as the max-speed
    flight with stops at the scheduled hover points. Per-node energies of the
    assembled trajectory equal the allocation's energies exactly (the sweep
    cruise energies telescope across the hover stops).

    Returns (Trajectory, energies, DualCertificate).
    """
    problem = WindowProblem.for_window(params, topo, window)
    sol = solve_window(problem, warm=warm, gap_tol=gap_tol)
    traj = assemble_shf(sol.schedule, params)
    return traj, sol.energies, sol.certificate


def speed_free_solution(params: SystemParams, topo: Topology) -> WindowSolution:
    """Solve the relaxation with the speed limit removed.

    All mission time becomes hover time at freely chosen points over the node
    span; its optimum upper-bounds every speed-limited trajectory.
    """
    return solve_window(WindowProblem.speed_free(params, topo))


def speed_free_upper_bound(params: SystemParams, topo: Topology) -> float:
    """Certified value of the speed-free relaxation (J).

    Reports the dual side of the relaxation's certificate (equal to its
    min-energy up to the certificate gap), so relaxation dominance over any
    speed-limited value holds exactly in floating point, not just up to the
    solver's recovery error.
    """
    return speed_free_solution(params, topo).certificate.dual_value


def _grid_points(topo: Topology, resolution: float) -> np.ndarray:
    """Endpoint grid over [w_1, w_K]: the span rounded to whole cells."""
    span = topo.span
    w1 = topo.positions[0]
    if span <= 0.0:
        return np.array([w1])
    ncells = max(1, int(round(span / resolution)))
    pts = w1 + np.arange(ncells + 1) * (span / ncells)
    pts[-1] = topo.positions[-1]
    return pts


def _window_list(pts: np.ndarray, params: SystemParams):
    """Feasible (lo, hi) index pairs plus the count of infeasible ones."""
    max_width = params.max_speed * params.duration + 1e-12
    feasible = []
    infeasible = 0
    for i in range(pts.size):
        for j in range(i, pts.size):
            if pts[j] - pts[i] <= max_width:
                feasible.append((i, j))
            else:
                infeasible += 1
    return feasible, infeasible


def _batch_probe(pts, atn, i_idx, j_idx, params: SystemParams, topo: Topology,
                 lam: np.ndarray) -> np.ndarray:
    """Dual value of every window at one weight vector: exact upper bounds."""
    step0 = default_scan_step(params, float(pts[0]), float(pts[-1]))
    return _kernels.batch_probe(
        topo.as_array(), params.gain, params.altitude ** 2, pts, atn,
        i_idx, j_idx, lam, params.max_speed, params.duration, step0, SCAN_LEVELS,
    )


def _search_stage(pts, pairs, params, topo, gap_tol, prune, stats: GridStats,
                  probe_lams, incumbent):
    """Solve windows best-bound-first, pruning provably dominated ones.

    `incumbent` is (value, (lo, hi), WindowSolution) or None. Each window's
    bound is the minimum dual value over the probe weights seen so far; after
    every full solve the remaining windows are reprobed at the fresh optimal
    weights, which tightens the bounds exactly where the search currently is.
    Pruning only discards windows whose bound falls strictly below
    the incumbent by a relative margin, so exact ties always get solved and
    the deterministic tie-break (smallest lo, then smallest hi) stays intact.
    """
    if not pairs:
        return incumbent
    i_idx = np.array([i for i, _ in pairs], dtype=np.int64)
    j_idx = np.array([j for _, j in pairs], dtype=np.int64)
    atn = np.arctan((pts[:, None] - topo.as_array()[None, :]) / params.altitude)
    bounds = np.full(len(pairs), np.inf)
    for lam in probe_lams:
        bounds = np.minimum(bounds, _batch_probe(pts, atn, i_idx, j_idx, params, topo, lam))
    lows = pts[i_idx]
    highs = pts[j_idx]
    best = incumbent
    warm = None
    active = np.ones(len(pairs), dtype=bool)
    while True:
        if best is not None and prune:
            cut = best[0] - PRUNE_REL_MARGIN * max(abs(best[0]), 1e-300)
            dropped = active & (bounds < cut)
            stats.pruned += int(dropped.sum())
            active &= ~dropped
        live = np.nonzero(active)[0]
        if live.size == 0:
            break
        # best bound first; ties resolve to smallest (lo, hi)
        order = np.lexsort((highs[live], lows[live], -bounds[live]))
        idx = live[order[0]]
        active[idx] = False
        lo, hi = float(lows[idx]), float(highs[idx])
        try:
            problem = WindowProblem.for_window(params, topo, (lo, hi))
            sol = solve_window(problem, warm=warm, gap_tol=gap_tol)
        except EllipsoidIterationError:
            stats.failed += 1
            continue
        stats.evaluated += 1
        stats.record(sol)
        warm = sol.certificate.weights
        if best is None or sol.min_energy > best[0] or (
            sol.min_energy == best[0] and (lo, hi) < best[1]
        ):
            best = (sol.min_energy, (lo, hi), sol)
        if active.any():
            fresh = _batch_probe(pts, atn, i_idx, j_idx, params, topo,
                                 sol.certificate.weights.values)
            bounds = np.minimum(bounds, fresh)
    return best


def plan(params: SystemParams, topo: Topology,
         config: PlannerConfig | None = None) -> SolveReport:
    """Globally optimal hover-and-fly plan over the endpoint grid.

    Enumerates windows (lo, hi) on the d_min grid (both endpoints range over
    the node span, hi >= lo), skips windows whose sweep alone exceeds the
    mission duration, solves the rest, and keeps the best min-energy. With
    `refine` set, a second pass re-runs the search at the fine resolution in
    a neighbourhood of the coarse best. Ties break to the smallest lo, then
    smallest hi. Identical inputs give bit-identical reports.
    """
    config = config or PlannerConfig()
    stats = GridStats()
    k = topo.k
    relax = speed_free_solution(params, topo)
    stats.record(relax)

    pts = _grid_points(topo, config.d_min)
    pairs, infeas = _window_list(pts, params)
    stats.infeasible += infeas
    if not pairs:
        raise ValueError("no feasible window: the mission cannot cover any endpoint pair")
    prune = config.prune and not config.exhaustive
    uniform = np.full(k, 1.0 / k)
    best = _search_stage(pts, pairs, params, topo, config.gap_tol, prune,
                         stats, [uniform], None)

    if config.refine > 0.0 and not config.exhaustive and topo.span > 0.0 \
            and config.refine < config.d_min:
        pts_f = _grid_points(topo, config.refine)
        lo_b, hi_b = best[1]
        r = config.refine_radius + 1e-12
        sel_lo = np.abs(pts_f - lo_b) <= r
        sel_hi = np.abs(pts_f - hi_b) <= r
        idx_lo = np.nonzero(sel_lo)[0]
        idx_hi = np.nonzero(sel_hi)[0]
        max_width = params.max_speed * params.duration + 1e-12
        pairs_f = []
        for i in idx_lo:
            for j in idx_hi:
                if j < i:
                    continue
                if pts_f[j] - pts_f[i] <= max_width:
                    pairs_f.append((i, j))
                else:
                    stats.infeasible += 1
        probe_lams = [best[2].certificate.weights.values, uniform]
        best = _search_stage(pts_f, pairs_f, params, topo, config.gap_tol,
                             prune, stats, probe_lams, best)

    # Also solve the window spanned by the relaxation's hover points, with
    # those points forced into the allocation LP: its optimum dominates the
    # heuristic baseline by construction, so the report never falls below it
    # through endpoint-grid quantisation alone.
    rpts = relax.schedule.points
    if rpts.size and (rpts[-1] - rpts[0]) / params.max_speed <= params.duration:
        window_h = (float(rpts[0]), float(rpts[-1]))
        try:
            problem = WindowProblem.for_window(params, topo, window_h)
            sol_h = solve_window(problem, warm=best[2].certificate.weights,
                                 gap_tol=config.gap_tol, extra_candidates=rpts)
            stats.evaluated += 1
            stats.record(sol_h)
            if sol_h.min_energy > best[0]:
                best = (sol_h.min_energy, window_h, sol_h)
        except EllipsoidIterationError:
            stats.failed += 1

    value, window, sol = best
    traj = assemble_shf(sol.schedule, params)
    return SolveReport(
        best_window=window,
        trajectory=traj,
        energies=sol.energies,
        min_energy=value,
        certificate=sol.certificate,
        upper_bound=relax.certificate.dual_value,
        grid_stats=stats,
    )
