"""Piecewise hover/cruise trajectories and the max-speed/speed-free decomposition.

A trajectory is an ordered list of segments moving left-to-right (reversals
never help on a line, so only unidirectional motion is represented). Physical
trajectories are position-continuous and respect the speed limit; the
speed-free residual produced by :func:`decompose` may contain position gaps
and cruises faster than the limit, so those two checks are applied separately
via :meth:`Trajectory.validate_physical`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .model import SystemParams, Topology, cruise_energy_nodes, hover_energy_nodes

__all__ = [
    "Hover",
    "Cruise",
    "Segment",
    "Trajectory",
    "HoverSchedule",
    "energy_vector",
    "decompose",
    "assemble_shf",
    "trace_rows",
]

# Cruises within this of the speed limit count as max-speed; the residual
# pass speed V*v/(V-v) diverges as v -> V.
SPEED_EPS = 1e-12
# Hover points closer than this are merged during canonicalisation.
MERGE_EPS = 1e-9
# Allowed mismatch of a schedule's time budget (s).
BUDGET_EPS = 1e-9


@dataclass(frozen=True)
class Hover:
    x: float
    tau: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.tau)):
            raise ValueError("hover fields must be finite")
        if self.tau < 0.0:
            raise ValueError(f"hover duration must be non-negative, got {self.tau!r}")

    @property
    def start(self) -> float:
        return self.x

    @property
    def end(self) -> float:
        return self.x

    @property
    def duration(self) -> float:
        return self.tau


@dataclass(frozen=True)
class Cruise:
    x_start: float
    x_end: float
    speed: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x_start, self.x_end, self.speed)):
            raise ValueError("cruise fields must be finite")
        if self.x_start > self.x_end:
            raise ValueError(f"cruise must be left-to-right, got {self.x_start!r} > {self.x_end!r}")
        if self.speed <= 0.0:
            raise ValueError(f"cruise speed must be positive, got {self.speed!r}")

    @property
    def start(self) -> float:
        return self.x_start

    @property
    def end(self) -> float:
        return self.x_end

    @property
    def duration(self) -> float:
        return (self.x_end - self.x_start) / self.speed


Segment = Union[Hover, Cruise]


@dataclass(frozen=True)
class Trajectory:
    """Ordered hover/cruise segments with non-decreasing positions.

    The constructor only enforces per-segment sanity and left-to-right
    ordering; continuity and the speed limit are physical-trajectory
    properties checked by :meth:`validate_physical`.
    """

    segments: tuple

    def __post_init__(self):
        segs = tuple(self.segments)
        for seg in segs:
            if not isinstance(seg, (Hover, Cruise)):
                raise TypeError(f"unsupported segment type {type(seg)!r}")
        for prev, cur in zip(segs, segs[1:]):
            if cur.start < prev.end - MERGE_EPS:
                raise ValueError(
                    f"segments must be ordered left-to-right: {cur.start!r} < {prev.end!r}"
                )
        object.__setattr__(self, "segments", segs)

    @property
    def duration(self) -> float:
        return sum(seg.duration for seg in self.segments)

    @property
    def start(self) -> float:
        if not self.segments:
            raise ValueError("empty trajectory has no start position")
        return self.segments[0].start

    @property
    def end(self) -> float:
        if not self.segments:
            raise ValueError("empty trajectory has no end position")
        return self.segments[-1].end

    def is_contiguous(self, tol: float = MERGE_EPS) -> bool:
        return all(
            abs(cur.start - prev.end) <= tol
            for prev, cur in zip(self.segments, self.segments[1:])
        )

    def validate_physical(self, params: SystemParams) -> "Trajectory":
        """Check position continuity and the speed limit; returns self."""
        if not self.is_contiguous():
            raise ValueError("physical trajectory must be position-continuous")
        for seg in self.segments:
            if isinstance(seg, Cruise) and seg.speed > params.max_speed + SPEED_EPS:
                raise ValueError(
                    f"cruise speed {seg.speed!r} exceeds limit {params.max_speed!r}"
                )
        return self

    def hover_count(self) -> int:
        return sum(1 for seg in self.segments if isinstance(seg, Hover))


@dataclass(frozen=True)
class HoverSchedule:
    """Hover points and durations inside a window, plus the window itself.

    The window endpoints bound the hover points; together with the mission
    duration they determine the max-speed sweep that complements the hovers.
    """

    points: np.ndarray
    durations: np.ndarray
    window: tuple

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points, dtype=np.float64))
        dur = np.atleast_1d(np.asarray(self.durations, dtype=np.float64))
        if pts.shape != dur.shape:
            raise ValueError("points and durations must have equal length")
        lo, hi = float(self.window[0]), float(self.window[1])
        if lo > hi:
            raise ValueError(f"window must satisfy lo <= hi, got {(lo, hi)!r}")
        if np.any(dur < 0.0):
            raise ValueError("hover durations must be non-negative")
        if pts.size and (pts.min() < lo - MERGE_EPS or pts.max() > hi + MERGE_EPS):
            raise ValueError("hover points must lie inside the window")
        pts = np.clip(pts, lo, hi)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "durations", dur)
        object.__setattr__(self, "window", (lo, hi))

    @property
    def hover_total(self) -> float:
        return float(self.durations.sum())

    def canonical(self) -> "HoverSchedule":
        """Sort points, merge near-duplicates, and drop zero-duration hovers.

        Merged points take the duration-weighted mean position so the result
        is strictly increasing.
        """
        order = np.argsort(self.points, kind="stable")
        pts = self.points[order]
        dur = self.durations[order]
        out_p, out_d = [], []
        for p, d in zip(pts, dur):
            if out_p and p - out_p[-1] < MERGE_EPS:
                total = out_d[-1] + d
                if total > 0.0:
                    out_p[-1] = (out_p[-1] * out_d[-1] + p * d) / total
                else:
                    out_p[-1] = 0.5 * (out_p[-1] + p)
                out_d[-1] = total
            else:
                out_p.append(float(p))
                out_d.append(float(d))
        keep = [(p, d) for p, d in zip(out_p, out_d) if d > 0.0]
        if keep:
            kp, kd = zip(*keep)
        else:
            kp, kd = (), ()
        return HoverSchedule(np.asarray(kp), np.asarray(kd), self.window)


def energy_vector(traj: Trajectory, topo: Topology, params: SystemParams) -> np.ndarray:
    """Exact per-node energy (J) of a trajectory via the closed segment forms."""
    w = topo.as_array()
    total = np.zeros(topo.k)
    for seg in traj.segments:
        if isinstance(seg, Hover):
            total += hover_energy_nodes(params, w, seg.x, seg.tau)
        else:
            total += cruise_energy_nodes(params, w, seg.x_start, seg.x_end, seg.speed)
    return total


def decompose(traj: Trajectory, params: SystemParams):
    """Split a physical trajectory into a max-speed sweep plus a speed-free rest.

    The sweep is the single max-speed cruise over the covered interval. The
    residual keeps hovers unchanged, drops max-speed cruises entirely, and
    replaces each slower cruise over [a, b] at speed v by a pass over the same
    interval at the equivalent speed V*v/(V-v), so that per-node energies add
    up exactly. The residual is returned as a (possibly discontinuous,
    over-speed) Trajectory.
    """
    traj.validate_physical(params)
    v_max = params.max_speed
    residual = []
    for seg in traj.segments:
        if isinstance(seg, Hover):
            residual.append(seg)
        elif v_max - seg.speed <= SPEED_EPS:
            continue  # absorbed by the sweep
        else:
            equiv = v_max * seg.speed / (v_max - seg.speed)
            residual.append(Cruise(seg.x_start, seg.x_end, equiv))
    if traj.segments and traj.end > traj.start:
        sweep = Trajectory((Cruise(traj.start, traj.end, v_max),))
    else:
        sweep = Trajectory(())
    return sweep, Trajectory(tuple(residual))


def assemble_shf(schedule: HoverSchedule, params: SystemParams) -> Trajectory:
    """Build the hover-and-fly trajectory realising a hover schedule.

    The UAV starts at the window's left end, flies at max speed, and stops at
    each hover point for its duration. Requires the time budget to balance:
    window width / max_speed + total hover time == mission duration.
    """
    sched = schedule.canonical()
    lo, hi = sched.window
    flight = (hi - lo) / params.max_speed
    mismatch = flight + sched.hover_total - params.duration
    if abs(mismatch) > BUDGET_EPS:
        raise ValueError(
            f"schedule time budget off by {mismatch:.3e} s "
            f"(flight {flight!r} + hover {sched.hover_total!r} != {params.duration!r})"
        )
    segs = []
    pos = lo
    for p, d in zip(sched.points, sched.durations):
        if p > pos:
            segs.append(Cruise(pos, float(p), params.max_speed))
            pos = float(p)
        segs.append(Hover(float(p), float(d)))
    if hi > pos:
        segs.append(Cruise(pos, hi, params.max_speed))
    return Trajectory(tuple(segs))


def trace_rows(traj: Trajectory, dt: float = 0.01) -> np.ndarray:
    """Sample (t, x) rows every dt seconds plus exact segment boundaries.

    Returns an (n, 2) array sorted by time; duplicate times within 1e-12 s
    are collapsed (boundary rows win).
    """
    if dt <= 0.0:
        raise ValueError(f"trace step must be positive, got {dt!r}")
    boundaries = [(0.0, traj.segments[0].start if traj.segments else 0.0)]
    t = 0.0
    for seg in traj.segments:
        t += seg.duration
        boundaries.append((t, seg.end))
    total = t
    times = [bt for bt, _ in boundaries]
    n_samples = int(math.floor(total / dt + 1e-12))
    times.extend(i * dt for i in range(n_samples + 1))
    times = sorted(set(times))
    # collapse near-duplicates, keeping the first occurrence
    kept = []
    for tv in times:
        if kept and tv - kept[-1] <= 1e-12:
            continue
        kept.append(min(tv, total))
    rows = np.empty((len(kept), 2))
    for i, tv in enumerate(kept):
        rows[i, 0] = tv
        rows[i, 1] = _position_at(traj, tv)
    return rows


def random_trajectory(params: SystemParams, rng, span, max_segments: int = 20) -> Trajectory:
    """Random unidirectional speed-feasible trajectory inside a span.

    Mixes hovers and cruises at random sub-limit speeds; used by self-tests
    and the decomposition identity checks.
    """
    lo, hi = float(span[0]), float(span[1])
    n = int(rng.integers(1, max_segments + 1))
    kinds = rng.uniform(0.0, 1.0, size=n)
    pos = lo + rng.uniform(0.0, 1.0) * max(0.0, (hi - lo) * 0.25)
    segs = []
    for i in range(n):
        if kinds[i] < 0.45 or pos >= hi:
            segs.append(Hover(pos, float(rng.uniform(0.0, params.duration / n))))
        else:
            reach = float(rng.uniform(0.0, (hi - pos) / max(1, n - i)))
            speed = float(rng.uniform(0.05, 1.0)) * params.max_speed
            if reach > 0.0:
                segs.append(Cruise(pos, pos + reach, speed))
                pos += reach
            else:
                segs.append(Hover(pos, float(rng.uniform(0.0, params.duration / n))))
    return Trajectory(tuple(segs))


def _position_at(traj: Trajectory, t: float) -> float:
    if not traj.segments:
        return 0.0
    if t <= 0.0:
        return traj.start
    elapsed = 0.0
    for seg in traj.segments:
        d = seg.duration
        if t <= elapsed + d or seg is traj.segments[-1]:
            local = min(max(t - elapsed, 0.0), d)
            if isinstance(seg, Hover):
                return seg.x
            return seg.x_start + seg.speed * local
        elapsed += d
    return traj.end
