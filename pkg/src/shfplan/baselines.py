"""Reference algorithms: heuristic hover-and-fly and SCA time refinement.

Both are the standard prior designs this planner is benchmarked against.
The heuristic plants the speed-free relaxation's hover points and rescales
their durations to make room for the flight time; SCA quantizes time and
iteratively improves a concave surrogate of the max-min objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import SystemParams, Topology
from .planner import speed_free_solution
from .trajectory import Cruise, Hover, HoverSchedule, Trajectory, assemble_shf, energy_vector

__all__ = [
    "QuantizedTrajectory",
    "heuristic_shf",
    "sca_refine",
    "sample_midpoints",
    "random_quantized_init",
]

SPEED_SLACK = 1e-12  # allowed per-slot speed overshoot
SCA_MAX_OUTER = 200
SCA_REL_TOL = 1e-8
SCA_INNER_ITERS = 80
# diminishing step a/(b+r) for the normalised inner ascent direction
SCA_STEP_B = 8.0


@dataclass(frozen=True)
class QuantizedTrajectory:
    """Midpoint position samples of a slot-quantized trajectory.

    positions[n] is the UAV position at the midpoint of slot n (slot length
    dt, M = round(T/dt) slots). The continuous realisation holds the first
    and last positions for half a slot and cruises between midpoints, so the
    speed limit becomes |positions[n+1] - positions[n]| <= V*dt per slot.
    """

    dt: float
    positions: np.ndarray

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("slot length must be positive")
        pos = np.atleast_1d(np.asarray(self.positions, dtype=np.float64))
        if pos.size == 0:
            raise ValueError("need at least one slot")
        object.__setattr__(self, "positions", pos)

    def check_speed(self, params: SystemParams):
        step = params.max_speed * self.dt + SPEED_SLACK
        jumps = np.abs(np.diff(self.positions))
        if jumps.size and jumps.max() > step:
            raise ValueError(
                f"per-slot move {jumps.max():.6g} m exceeds limit {step:.6g} m"
            )
        return self

    def to_trajectory(self, params: SystemParams) -> Trajectory:
        """Continuous hover/cruise realisation of the samples."""
        self.check_speed(params)
        pos = self.positions
        segs = [Hover(float(pos[0]), 0.5 * self.dt)]
        for a, b in zip(pos, pos[1:]):
            if abs(b - a) <= 0.0:
                segs.append(Hover(float(a), self.dt))
            elif b > a:
                segs.append(Cruise(float(a), float(b), (b - a) / self.dt))
            else:
                # keep the representation unidirectional per physical segment
                raise ValueError("quantized samples must be rearranged before realising reversals")
        segs.append(Hover(float(pos[-1]), 0.5 * self.dt))
        return Trajectory(tuple(segs))

    def quantized_energies(self, topo: Topology, params: SystemParams) -> np.ndarray:
        """Rectangle-rule per-node energies at the slot midpoints (J)."""
        return _kernels.quantized_energies(
            topo.as_array(), params.gain, params.altitude ** 2, self.dt, self.positions
        )


def _exact_energies_oriented(qt: QuantizedTrajectory, topo: Topology,
                             params: SystemParams) -> np.ndarray:
    """Exact closed-form energies of the realisation, allowing reversals.

    The realisation of a general sample path moves both ways; energy is
    direction-agnostic, so each slot contributes its |move|-length cruise.
    """
    qt.check_speed(params)
    w = topo.as_array()
    total = np.zeros(topo.k)
    pos = qt.positions
    from .model import cruise_energy_nodes, hover_energy_nodes

    total += hover_energy_nodes(params, w, float(pos[0]), 0.5 * qt.dt)
    for a, b in zip(pos, pos[1:]):
        if a == b:
            total += hover_energy_nodes(params, w, float(a), qt.dt)
        else:
            lo, hi = (a, b) if a < b else (b, a)
            total += cruise_energy_nodes(params, w, float(lo), float(hi), abs(b - a) / qt.dt)
    total += hover_energy_nodes(params, w, float(pos[-1]), 0.5 * qt.dt)
    return total


def slot_count(params: SystemParams, dt: float) -> int:
    m = int(round(params.duration / dt))
    if m < 1:
        raise ValueError(f"slot length {dt!r} leaves no slots in {params.duration!r} s")
    return m


def sample_midpoints(traj: Trajectory, params: SystemParams, dt: float) -> QuantizedTrajectory:
    """Sample a continuous trajectory at slot midpoints."""
    from .trajectory import _position_at

    m = slot_count(params, dt)
    pos = np.empty(m)
    for n in range(m):
        pos[n] = _position_at(traj, (n + 0.5) * dt)
    return QuantizedTrajectory(dt=dt, positions=pos)


def heuristic_shf(params: SystemParams, topo: Topology):
    """Visit the speed-free relaxation's hover points at max speed.

    The relaxed durations (which fill the whole mission) are scaled by
    (T - flight_time)/T to make room for the flight between the first and
    last hover points. If even the bare flight exceeds the mission, the UAV
    simply flies at max speed from the first hover point for the whole
    mission; that corner is a documented convention, not part of the
    original design.

    Returns (Trajectory, exact per-node energies).
    """
    relax = speed_free_solution(params, topo)
    sched = relax.schedule.canonical()
    pts = sched.points
    durs = sched.durations
    if pts.size == 0:
        # zero hover budget cannot happen for the relaxation; defensive
        pts = np.array([topo.positions[0]])
        durs = np.array([params.duration])
    flight = (pts[-1] - pts[0]) / params.max_speed
    if flight <= params.duration:
        scale = (params.duration - flight) / params.duration
        scaled = durs * scale
        # the relaxed durations sum to T, so scaled ones sum to T - flight
        sched2 = HoverSchedule(pts, scaled, (float(pts[0]), float(pts[-1])))
        traj = assemble_shf(sched2, params)
    else:
        reach = pts[0] + params.max_speed * params.duration
        traj = Trajectory((Cruise(float(pts[0]), float(reach), params.max_speed),))
    return traj, energy_vector(traj, topo, params)


def sca_refine(params: SystemParams, topo: Topology, dt: float,
               init: QuantizedTrajectory | None = None,
               max_outer: int = SCA_MAX_OUTER,
               rel_tol: float = SCA_REL_TOL,
               inner_iters: int = SCA_INNER_ITERS):
    """Successive convex refinement of a quantized trajectory.

    Around the current iterate every node energy is lower-bounded by the
    first-order expansion of u -> gain/(u + H^2) at u = (x - w_k)^2, a global
    concave-quadratic bound, and the surrogate max-min problem is improved by
    projected subgradient ascent. The true quantized objective is monotone
    non-decreasing across rounds; iteration stops below rel_tol relative
    improvement or after max_outer rounds.

    Returns (QuantizedTrajectory, exact per-node energies of its realisation,
    objective curve).
    """
    if init is None:
        base, _ = heuristic_shf(params, topo)
        init = sample_midpoints(base, params, dt)
    else:
        if abs(init.dt - dt) > 1e-12:
            raise ValueError("init slot length must match dt")
        if init.positions.size != slot_count(params, dt):
            raise ValueError("init slot count must match duration/dt")
        init.check_speed(params)
    span = max(topo.span, params.altitude)
    m = init.positions.size
    step_a = 0.25 * span * math.sqrt(m)
    xs, curve, _ = _kernels.sca_run(
        topo.as_array(), params.gain, params.altitude ** 2, params.max_speed,
        dt, init.positions, max_outer, rel_tol, inner_iters, step_a, SCA_STEP_B,
    )
    qt = QuantizedTrajectory(dt=dt, positions=xs)
    energies = _exact_energies_oriented(qt, topo, params)
    return qt, energies, curve


def random_quantized_init(params: SystemParams, topo: Topology, dt: float,
                          rng: np.random.Generator) -> QuantizedTrajectory:
    """Random speed-feasible sample path: a clipped random walk over the span."""
    m = slot_count(params, dt)
    lo, hi = topo.positions[0], topo.positions[-1]
    if hi <= lo:
        return QuantizedTrajectory(dt=dt, positions=np.full(m, lo))
    start = rng.uniform(lo, hi)
    steps = rng.uniform(-params.max_speed * dt, params.max_speed * dt, size=m - 1)
    walk = start + np.concatenate(([0.0], np.cumsum(steps)))
    # clipping is 1-Lipschitz, so per-slot moves stay feasible
    return QuantizedTrajectory(dt=dt, positions=np.clip(walk, lo, hi))
