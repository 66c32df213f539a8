"""Physical model: mission parameters, node topology, and segment energies.

All quantities are SI with linear (non-dB) channel gains. A UAV flies at a
fixed altitude above a line of ground nodes; the RF power a node receives
follows the free-space path-loss model, and the energy collected while the
UAV hovers or cruises at constant speed has a closed arctan form that the
planner uses everywhere instead of numerical integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemParams",
    "Topology",
    "received_power",
    "received_power_nodes",
    "cruise_energy",
    "cruise_energy_nodes",
    "hover_energy",
    "hover_energy_nodes",
    "adaptive_simpson",
    "power_slope_bound",
]


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of one charging mission.

    beta0      linear channel power gain at 1 m reference distance
    power      transmit power (W)
    altitude   flight altitude (m)
    max_speed  speed limit (m/s)
    duration   mission duration (s)
    """

    beta0: float
    power: float
    altitude: float
    max_speed: float
    duration: float

    def __post_init__(self):
        for name in ("beta0", "power", "altitude", "max_speed", "duration"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def gain(self) -> float:
        """Combined link constant beta0 * power (W m^2)."""
        return self.beta0 * self.power


@dataclass(frozen=True)
class Topology:
    """Sorted horizontal positions of the ground nodes (m)."""

    positions: tuple

    def __post_init__(self):
        if len(self.positions) == 0:
            raise ValueError("topology needs at least one node")
        pos = tuple(float(p) for p in self.positions)
        for p in pos:
            if not math.isfinite(p):
                raise ValueError(f"node position must be finite, got {p!r}")
        if any(b < a for a, b in zip(pos, pos[1:])):
            raise ValueError("node positions must be sorted non-decreasing")
        object.__setattr__(self, "positions", pos)

    @property
    def k(self) -> int:
        return len(self.positions)

    @property
    def span(self) -> float:
        return self.positions[-1] - self.positions[0]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=np.float64)


def received_power(params: SystemParams, node_x: float, uav_x: float) -> float:
    """Instantaneous RF power (W) at a node for a UAV at horizontal uav_x."""
    d = uav_x - node_x
    return params.gain / (d * d + params.altitude * params.altitude)


def received_power_nodes(params: SystemParams, nodes: np.ndarray, uav_x: float) -> np.ndarray:
    """Vectorised received_power over an array of node positions."""
    d = uav_x - np.asarray(nodes, dtype=np.float64)
    return params.gain / (d * d + params.altitude * params.altitude)


def cruise_energy(params: SystemParams, node_x: float, a: float, b: float, speed: float) -> float:
    """Energy (J) a node collects while the UAV cruises from a to b at constant speed.

    Closed form of the path-loss integral:
        gain / (speed * H) * (atan((b - node_x)/H) - atan((a - node_x)/H))

    The speed is not capped at max_speed here: the decomposition of a slow
    cruise produces a residual pass whose equivalent speed exceeds the limit.
    """
    if speed <= 0.0:
        raise ValueError(f"cruise speed must be positive, got {speed!r}")
    if a > b:
        raise ValueError(f"cruise must be left-to-right, got a={a!r} > b={b!r}")
    h = params.altitude
    return (params.gain / (speed * h)) * (math.atan((b - node_x) / h) - math.atan((a - node_x) / h))


def cruise_energy_nodes(params: SystemParams, nodes: np.ndarray, a: float, b: float, speed: float) -> np.ndarray:
    """Vectorised cruise_energy over an array of node positions."""
    if speed <= 0.0:
        raise ValueError(f"cruise speed must be positive, got {speed!r}")
    if a > b:
        raise ValueError(f"cruise must be left-to-right, got a={a!r} > b={b!r}")
    h = params.altitude
    w = np.asarray(nodes, dtype=np.float64)
    return (params.gain / (speed * h)) * (np.arctan((b - w) / h) - np.arctan((a - w) / h))


def hover_energy(params: SystemParams, node_x: float, hover_x: float, tau: float) -> float:
    """Energy (J) a node collects while the UAV hovers at hover_x for tau seconds."""
    if tau < 0.0:
        raise ValueError(f"hover duration must be non-negative, got {tau!r}")
    return tau * received_power(params, node_x, hover_x)


def hover_energy_nodes(params: SystemParams, nodes: np.ndarray, hover_x: float, tau: float) -> np.ndarray:
    """Vectorised hover_energy over an array of node positions."""
    if tau < 0.0:
        raise ValueError(f"hover duration must be non-negative, got {tau!r}")
    return tau * received_power_nodes(params, nodes, hover_x)


def power_slope_bound(params: SystemParams) -> float:
    """Global bound on |d/dx received_power|, attained at offset H/sqrt(3).

    Equals (3*sqrt(3)/8) * gain / H^3; used for certified discretisation slack.
    """
    h = params.altitude
    return (3.0 * math.sqrt(3.0) / 8.0) * params.gain / (h * h * h)


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-12, max_depth: int = 60) -> float:
    """Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.

    Fallback integrator for arbitrary power profiles; the planner itself only
    uses closed forms. Iterative (explicit stack) to avoid recursion limits.
    """
    if a == b:
        return 0.0
    if a > b:
        raise ValueError("integration bounds must satisfy a <= b")

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = simpson(a, b, fa, fm, fb)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        x0, x2, f0, f1, f2, s, eps, depth = stack.pop()
        xm = 0.5 * (x0 + x2)
        lm = 0.5 * (x0 + xm)
        rm = 0.5 * (xm + x2)
        flm, frm = f(lm), f(rm)
        left = simpson(x0, xm, f0, flm, f1)
        right = simpson(xm, x2, f1, frm, f2)
        err = left + right - s
        if depth >= max_depth or abs(err) <= 15.0 * eps:
            total += left + right + err / 15.0
        else:
            stack.append((x0, xm, f0, flm, f1, left, 0.5 * eps, depth + 1))
            stack.append((xm, x2, f1, frm, f2, right, 0.5 * eps, depth + 1))
    return total
