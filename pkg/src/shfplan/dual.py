"""Exact solve of the fixed-window charging problem via Lagrangian duality.

For a window [lo, hi] the mission splits into a fixed max-speed sweep across
the window plus a hover budget T - (hi - lo)/V to spend freely inside it.
The max-min hover allocation satisfies strong duality (time sharing), so
we minimise the convex dual over the weight simplex with the ellipsoid
method, then recover the primal hover schedule by a small time-sharing LP
over the pooled maximiser candidates. The duality gap of the certificate
bounds the suboptimality of the recovered schedule, so a small gap certifies
the solution regardless of how the dual search got there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .lp import solve_lp
from .model import SystemParams, Topology, cruise_energy_nodes, received_power_nodes
from .trajectory import HoverSchedule
from .weighted import (
    SCAN_LEVELS,
    MaximizerSet,
    SimplexWeights,
    default_scan_step,
    global_maximizers,
)

__all__ = [
    "WindowProblem",
    "DualCertificate",
    "WindowSolution",
    "DualDiagnostics",
    "InfeasibleWindowError",
    "EllipsoidIterationError",
    "dual_value",
    "solve_dual",
    "time_sharing_lp",
    "solve_window",
]

RADIUS_TOL = 1e-10
STALL_REL = 1e-10
STALL_WINDOW = 50
MAX_ITERATIONS = 10_000
POOL_CAP = 25
POOL_TIE_TOL = 1e-6
DEFAULT_GAP_TOL = 1e-4
COLD_RADIUS = 1.0
WARM_RADIUS = 0.35
BUDGET_EPS = 1e-9
CANDIDATE_MERGE_EPS = 1e-9


class InfeasibleWindowError(ValueError):
    """The window is too wide to traverse within the mission duration."""


class EllipsoidIterationError(RuntimeError):
    """Iteration cap exceeded; carries the best iterate found so far."""

    def __init__(self, message, best_weights=None, best_value=None):
        super().__init__(message)
        self.best_weights = best_weights
        self.best_value = best_value


@dataclass(frozen=True)
class WindowProblem:
    """Hover allocation problem for one window of the node line.

    hover_budget   time left for hovering after the max-speed sweep (s)
    sweep_energy   per-node energy of the sweep itself (J)
    """

    params: SystemParams
    topo: Topology
    window: tuple
    hover_budget: float
    sweep_energy: np.ndarray

    @staticmethod
    def for_window(params: SystemParams, topo: Topology, window) -> "WindowProblem":
        lo, hi = float(window[0]), float(window[1])
        if lo > hi:
            raise ValueError(f"window must satisfy lo <= hi, got {(lo, hi)!r}")
        budget = params.duration - (hi - lo) / params.max_speed
        if budget < -BUDGET_EPS:
            raise InfeasibleWindowError(
                f"window {(lo, hi)!r} needs {(hi - lo) / params.max_speed:.6g} s "
                f"of flight but only {params.duration:.6g} s are available"
            )
        budget = max(budget, 0.0)
        if hi > lo:
            ebar = cruise_energy_nodes(params, topo.as_array(), lo, hi, params.max_speed)
        else:
            ebar = np.zeros(topo.k)
        return WindowProblem(params, topo, (lo, hi), budget, ebar)

    @staticmethod
    def speed_free(params: SystemParams, topo: Topology) -> "WindowProblem":
        """Relaxation with the speed limit removed: all time is hover time."""
        lo, hi = topo.positions[0], topo.positions[-1]
        return WindowProblem(params, topo, (lo, hi), params.duration, np.zeros(topo.k))


@dataclass(frozen=True)
class DualCertificate:
    """Optimality certificate: dual upper bound vs recovered primal value."""

    weights: SimplexWeights
    dual_value: float
    primal_value: float
    gap: float


@dataclass(frozen=True)
class DualDiagnostics:
    status: int
    iterations: int
    radius: float
    best_value: float
    pool_weights: np.ndarray  # (pool_n, K)
    pool_values: np.ndarray
    hist_values: np.ndarray = field(default_factory=lambda: np.empty(0))
    hist_weights: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    cold_retry: bool = False


@dataclass(frozen=True)
class WindowSolution:
    schedule: HoverSchedule
    energies: np.ndarray
    min_energy: float
    certificate: DualCertificate
    diagnostics: DualDiagnostics


def _expand(y: np.ndarray) -> np.ndarray:
    lam = np.empty(y.size + 1)
    lam[:-1] = y
    lam[-1] = 1.0 - y.sum()
    return lam


def dual_value(problem: WindowProblem, weights: SimplexWeights):
    """Dual objective, one subgradient, and the tied maximiser set.

    value = weights . sweep_energy + hover_budget * F*(weights); the
    subgradient entry k is sweep_energy[k] + hover_budget * q_k(x*) for the
    leftmost maximiser x*.
    """
    if weights.k != problem.topo.k:
        raise ValueError("weight count must match node count")
    mset = global_maximizers(problem.params, problem.topo, weights, problem.window)
    value = float(weights.values @ problem.sweep_energy) + problem.hover_budget * mset.value
    xstar = float(mset.points[0])
    sub = problem.sweep_energy + problem.hover_budget * received_power_nodes(
        problem.params, problem.topo.as_array(), xstar
    )
    return value, sub, mset


def solve_dual(problem: WindowProblem, warm: SimplexWeights | None = None,
               want_hist: bool = False):
    """Minimise the dual over the simplex; returns (weights, diagnostics).

    Runs the ellipsoid method in the reduced space with the last weight
    eliminated, starting either from the uniform weights (unit radius, covers
    the simplex) or from a warm point with a smaller radius. A warm start may
    localise the wrong region; callers detect that through the duality gap
    and retry cold.
    """
    k = problem.topo.k
    if k == 1:
        w1 = SimplexWeights(np.ones(1))
        diag = DualDiagnostics(
            status=_kernels.STATUS_RADIUS, iterations=0, radius=0.0,
            best_value=dual_value(problem, w1)[0],
            pool_weights=np.ones((1, 1)), pool_values=np.zeros(1),
        )
        return w1, diag
    if warm is not None and warm.k != k:
        raise ValueError("warm-start weight count must match node count")
    y0 = (warm.values[:-1].copy() if warm is not None else np.full(k - 1, 1.0 / k))
    r0 = WARM_RADIUS if warm is not None else COLD_RADIUS
    lo, hi = problem.window
    step0 = default_scan_step(problem.params, lo, hi)
    out = _kernels.ellipsoid_window(
        problem.topo.as_array(), problem.params.gain, problem.params.altitude ** 2,
        lo, hi, problem.sweep_energy, problem.hover_budget,
        y0, r0, -np.inf, RADIUS_TOL, STALL_REL, STALL_WINDOW, MAX_ITERATIONS,
        POOL_CAP, step0, SCAN_LEVELS, want_hist,
    )
    status, best_y, best_val, pool_y, pool_val, pool_n, iters, radius, hist_v, hist_y = out
    lam_best = np.clip(_expand(best_y), 0.0, None)
    lam_best /= lam_best.sum()
    if status == _kernels.STATUS_ITER_LIMIT:
        raise EllipsoidIterationError(
            f"ellipsoid hit the {MAX_ITERATIONS}-iteration cap (radius {radius:.3e})",
            best_weights=SimplexWeights(lam_best), best_value=best_val,
        )
    pool_w = np.empty((pool_n, k))
    for i in range(pool_n):
        pool_w[i] = _expand(pool_y[i])
    hist_w = np.empty((hist_y.shape[0], k)) if want_hist else np.empty((0, k))
    if want_hist:
        for i in range(hist_y.shape[0]):
            hist_w[i] = _expand(hist_y[i])
    diag = DualDiagnostics(
        status=int(status), iterations=int(iters), radius=float(radius),
        best_value=float(best_val), pool_weights=pool_w,
        pool_values=pool_val[:pool_n].copy(),
        hist_values=hist_v.copy() if want_hist else np.empty(0),
        hist_weights=hist_w,
    )
    return SimplexWeights(lam_best), diag


def time_sharing_lp(problem: WindowProblem, candidates):
    """Allocate the hover budget over candidate points to maximise the
    minimum per-node energy (sweep energy included).

    Returns (HoverSchedule, optimal min-energy). Solved exactly by the dense
    simplex on the epigraph form: maximise e subject to
    e - sum_i tau_i q_k(x_i) <= sweep_energy_k and sum_i tau_i = budget.
    """
    cand = np.atleast_1d(np.asarray(candidates, dtype=np.float64))
    lo, hi = problem.window
    if cand.size and (cand.min() < lo - CANDIDATE_MERGE_EPS or cand.max() > hi + CANDIDATE_MERGE_EPS):
        raise ValueError("candidate hover points must lie inside the window")
    budget = problem.hover_budget
    if budget <= 0.0:
        sched = HoverSchedule(np.empty(0), np.empty(0), problem.window)
        return sched, float(problem.sweep_energy.min())
    if cand.size == 0:
        raise ValueError("positive hover budget needs at least one candidate point")
    cand = np.clip(np.sort(cand), lo, hi)
    k = problem.topo.k
    n = cand.size
    # q[k, i]: power at node k while hovering at candidate i
    q = np.empty((k, n))
    for i in range(n):
        q[:, i] = received_power_nodes(problem.params, problem.topo.as_array(), cand[i])
    nvar = n + 1  # taus then the epigraph value e
    c = np.zeros(nvar)
    c[-1] = 1.0
    a_ub = np.zeros((k, nvar))
    a_ub[:, :n] = -q
    a_ub[:, -1] = 1.0
    b_ub = problem.sweep_energy.copy()
    a_eq = np.zeros((1, nvar))
    a_eq[0, :n] = 1.0
    b_eq = np.array([budget])
    res = solve_lp(c, a_ub, b_ub, a_eq, b_eq)
    taus = res.x[:n]
    sched = HoverSchedule(cand, taus, problem.window).canonical()
    return sched, float(res.value)


def _recover_primal(problem: WindowProblem, weights: SimplexWeights,
                    diag: DualDiagnostics, extra_candidates=None):
    """Pool maximiser candidates over late dual iterates, then allocate time.

    Near an approximate dual optimum the exact tie structure can be split
    across neighbouring iterates, so candidates are pooled with a widened
    tie tolerance and zero-duration points are pruned after the LP.
    extra_candidates join the pool as-is, which lets a caller force the LP
    feasible set to contain a known-good allocation.
    """
    cand = [] if extra_candidates is None else [float(p) for p in extra_candidates]
    pool = list(diag.pool_weights)
    pool.append(weights.values)
    lo, hi = problem.window
    step0 = default_scan_step(problem.params, lo, hi)
    w = problem.topo.as_array()
    h2 = problem.params.altitude ** 2
    for lam in pool:
        lam = np.clip(np.asarray(lam), 0.0, None)
        s = lam.sum()
        if s <= 0.0:
            continue
        pts, _ = _kernels.maximizer_candidates(
            w, problem.params.gain, h2, lam / s, lo, hi, step0, SCAN_LEVELS, POOL_TIE_TOL
        )
        cand.extend(pts.tolist())
    cand.sort()
    merged = []
    for p in cand:
        if merged and p - merged[-1] <= CANDIDATE_MERGE_EPS:
            continue
        merged.append(p)
    if not merged and problem.hover_budget > 0.0:
        merged = [0.5 * (lo + hi)]  # defensive; the pool always yields a maximiser
    return time_sharing_lp(problem, np.asarray(merged))


def _assemble_solution(problem: WindowProblem, weights: SimplexWeights,
                       diag: DualDiagnostics, sched: HoverSchedule, primal: float):
    energies = problem.sweep_energy.copy()
    for p, tau in zip(sched.points, sched.durations):
        energies = energies + tau * received_power_nodes(
            problem.params, problem.topo.as_array(), float(p)
        )
    min_energy = float(energies.min())
    dual = diag.best_value
    gap = (dual - min_energy) / max(dual, 1e-300)
    cert = DualCertificate(weights=weights, dual_value=dual,
                           primal_value=min_energy, gap=gap)
    return WindowSolution(schedule=sched, energies=energies,
                          min_energy=min_energy, certificate=cert,
                          diagnostics=diag)


def solve_window(problem: WindowProblem, warm: SimplexWeights | None = None,
                 gap_tol: float = DEFAULT_GAP_TOL,
                 log_path=None, extra_candidates=None) -> WindowSolution:
    """Solve one window to optimality with a duality-gap certificate.

    A warm start that leaves a gap above gap_tol triggers one cold restart;
    the certificate keeps the tighter dual bound and the better primal. A gap
    still above gap_tol is reported through a warning, not an error.
    """
    want_hist = log_path is not None
    weights, diag = solve_dual(problem, warm=warm, want_hist=want_hist)
    sched, primal = _recover_primal(problem, weights, diag, extra_candidates)
    sol = _assemble_solution(problem, weights, diag, sched, primal)
    if warm is not None and sol.certificate.gap > gap_tol:
        weights2, diag2 = solve_dual(problem, warm=None, want_hist=want_hist)
        sched2, primal2 = _recover_primal(problem, weights2, diag2, extra_candidates)
        sol2 = _assemble_solution(problem, weights2, diag2, sched2, primal2)
        # merge certificates: tightest dual with the best primal stays valid
        if sol2.certificate.primal_value >= sol.certificate.primal_value:
            best, other = sol2, sol
        else:
            best, other = sol, sol2
        dual = min(sol.certificate.dual_value, sol2.certificate.dual_value)
        gap = (dual - best.certificate.primal_value) / max(dual, 1e-300)
        cert = DualCertificate(weights=best.certificate.weights, dual_value=dual,
                               primal_value=best.certificate.primal_value, gap=gap)
        diag_m = DualDiagnostics(
            status=best.diagnostics.status, iterations=diag.iterations + diag2.iterations,
            radius=best.diagnostics.radius, best_value=dual,
            pool_weights=best.diagnostics.pool_weights,
            pool_values=best.diagnostics.pool_values,
            hist_values=best.diagnostics.hist_values,
            hist_weights=best.diagnostics.hist_weights,
            cold_retry=True,
        )
        sol = WindowSolution(schedule=best.schedule, energies=best.energies,
                             min_energy=best.min_energy, certificate=cert,
                             diagnostics=diag_m)
    if sol.certificate.gap > gap_tol:
        import warnings

        warnings.warn(
            f"duality gap {sol.certificate.gap:.3e} above tolerance {gap_tol:.1e} "
            f"for window {problem.window!r}",
            RuntimeWarning, stacklevel=2,
        )
    if log_path is not None:
        _write_iterate_log(problem, sol.diagnostics, log_path)
    return sol


def _write_iterate_log(problem: WindowProblem, diag: DualDiagnostics, path):
    """Per-iterate CSV: iter, best dual so far, recovered primal, gap."""
    rows = ["iter,dual_value,primal_value,gap"]
    for i in range(diag.hist_weights.shape[0]):
        lam = diag.hist_weights[i]
        if np.any(lam < 0.0) or lam.sum() > 1.0 + 1e-12 or not np.all(np.isfinite(lam)):
            continue
        mini = DualDiagnostics(
            status=diag.status, iterations=i, radius=diag.radius,
            best_value=diag.hist_values[i],
            pool_weights=lam.reshape(1, -1), pool_values=np.zeros(1),
        )
        wts = SimplexWeights(np.clip(lam, 0.0, None) / np.clip(lam, 0.0, None).sum())
        _, primal = _recover_primal(problem, wts, mini)
        dual = diag.hist_values[i]
        gap = (dual - primal) / max(dual, 1e-300)
        rows.append(f"{i},{dual:.12g},{primal:.12g},{gap:.12g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
