"""Experiment configuration: YAML parsing, unit conversion, seeded topologies.

dB and dBm inputs are converted to linear units here and nowhere else; the
rest of the library works in linear units only. Random topologies draw K
independent uniforms on [0, D] from a seeded PCG64 stream and sort them, so
identical seeds give identical topologies on any platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .model import SystemParams, Topology
from .planner import PlannerConfig

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "topology_for_trial"]

ALGORITHMS = ("optimal", "heuristic", "sca", "upper_bound")
SWEEP_PARAMS = ("T", "V")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field path."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class TopologySpec:
    positions: tuple | None = None
    k: int = 0
    d: float = 0.0
    seed: int = 0

    @property
    def explicit(self) -> bool:
        return self.positions is not None


@dataclass(frozen=True)
class OutputSpec:
    summary: str = "out/summary.csv"
    traces: str = "out/traces"
    csv: str = "out/sweep.csv"
    plots: bool = True
    timings: bool = False  # wall-clock in CSV breaks byte-level rerun identity
    dt_trace: float = 0.01


@dataclass(frozen=True)
class ExperimentConfig:
    params: SystemParams
    topology: TopologySpec
    algorithms: tuple
    sweep_param: str | None
    sweep_values: tuple
    trials: int
    planner: PlannerConfig
    output: OutputSpec
    verify_restarts: int = 32
    verify_dx: float = 0.05
    verify_dt: float = 0.05


def _need(mapping, key, path, types):
    if key not in mapping:
        raise ConfigError(f"{path}{key}: missing required key")
    value = mapping[key]
    if not isinstance(value, types):
        raise ConfigError(f"{path}{key}: expected {types}, got {type(value).__name__}")
    return value


def _positive(value, path):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ConfigError(f"{path}: must be a positive finite number, got {value!r}")
    return float(value)


def load_config(path) -> ExperimentConfig:
    """Parse a YAML experiment file; errors carry precise field paths."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a mapping")
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    params = SystemParams(
        beta0=db_to_linear(_positive_or_any(raw, "beta0_db")),
        power=dbm_to_watts(_positive_or_any(raw, "p_dbm")),
        altitude=_positive(raw.get("altitude_m"), "altitude_m"),
        max_speed=_positive(raw.get("max_speed_mps"), "max_speed_mps"),
        duration=_positive(raw.get("duration_s"), "duration_s"),
    )

    topo_raw = _need(raw, "topology", "", dict)
    if "positions" in topo_raw:
        pos = topo_raw["positions"]
        if not isinstance(pos, (list, tuple)) or not pos:
            raise ConfigError("topology.positions: expected a non-empty list")
        try:
            Topology(tuple(float(p) for p in pos))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"topology.positions: {exc}") from exc
        topo = TopologySpec(positions=tuple(float(p) for p in pos))
    else:
        k = _need(topo_raw, "k", "topology.", int)
        if k < 1:
            raise ConfigError("topology.k: must be at least 1")
        d = _positive(topo_raw.get("d"), "topology.d")
        seed = _need(topo_raw, "seed", "topology.", int)
        topo = TopologySpec(k=k, d=d, seed=seed)

    algos = raw.get("algorithms", list(ALGORITHMS))
    if not isinstance(algos, (list, tuple)) or not algos:
        raise ConfigError("algorithms: expected a non-empty list")
    for a in algos:
        if a not in ALGORITHMS:
            raise ConfigError(f"algorithms: unknown algorithm {a!r}, pick from {ALGORITHMS}")

    sweep_param = None
    sweep_values: tuple = ()
    if "sweep" in raw and raw["sweep"]:
        sweep = _need(raw, "sweep", "", dict)
        sweep_param = _need(sweep, "param", "sweep.", str)
        if sweep_param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep.param: expected one of {SWEEP_PARAMS}, got {sweep_param!r}")
        values = _need(sweep, "values", "sweep.", (list, tuple))
        if not values:
            raise ConfigError("sweep.values: expected a non-empty list")
        sweep_values = tuple(_positive(v, f"sweep.values[{i}]") for i, v in enumerate(values))

    trials = raw.get("trials", 1)
    if not isinstance(trials, int) or trials < 1:
        raise ConfigError(f"trials: must be a positive integer, got {trials!r}")

    planner_raw = raw.get("planner", {}) or {}
    if not isinstance(planner_raw, dict):
        raise ConfigError("planner: expected a mapping")
    try:
        planner = PlannerConfig(
            d_min=float(planner_raw.get("d_min", 0.25)),
            refine=float(planner_raw.get("refine", 0.01)),
            gap_tol=float(planner_raw.get("gap_tol", 1e-4)),
            parallel=int(planner_raw.get("parallel", 1)),
            exhaustive=bool(planner_raw.get("exhaustive", False)),
        )
    except ValueError as exc:
        raise ConfigError(f"planner: {exc}") from exc

    out_raw = raw.get("output", {}) or {}
    if not isinstance(out_raw, dict):
        raise ConfigError("output: expected a mapping")
    output = OutputSpec(
        summary=str(out_raw.get("summary", "out/summary.csv")),
        traces=str(out_raw.get("traces", "out/traces")),
        csv=str(out_raw.get("csv", "out/sweep.csv")),
        plots=bool(out_raw.get("plots", True)),
        timings=bool(out_raw.get("timings", False)),
        dt_trace=float(out_raw.get("dt_trace", 0.01)),
    )

    verify_raw = raw.get("verify", {}) or {}
    if not isinstance(verify_raw, dict):
        raise ConfigError("verify: expected a mapping")

    return ExperimentConfig(
        params=params,
        topology=topo,
        algorithms=tuple(algos),
        sweep_param=sweep_param,
        sweep_values=sweep_values,
        trials=trials,
        planner=planner,
        output=output,
        verify_restarts=int(verify_raw.get("restarts", 32)),
        verify_dx=float(verify_raw.get("dx", 0.05)),
        verify_dt=float(verify_raw.get("dt", 0.05)),
    )


def _positive_or_any(raw, key):
    if key not in raw:
        raise ConfigError(f"{key}: missing required key")
    value = raw[key]
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{key}: must be a finite number, got {value!r}")
    return float(value)


def topology_for_trial(cfg: ExperimentConfig, trial: int) -> Topology:
    """Topology of one trial: explicit positions, or seeded uniform draws.

    Random specs use an independent PCG64 stream per trial, seeded with
    (seed, trial), so trial t is reproducible without generating trials
    0..t-1 first.
    """
    if cfg.topology.explicit:
        return Topology(cfg.topology.positions)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.topology.seed, trial])))
    draws = rng.uniform(0.0, cfg.topology.d, size=cfg.topology.k)
    return Topology(tuple(np.sort(draws)))


def params_with_sweep(params: SystemParams, sweep_param: str | None, value: float) -> SystemParams:
    if sweep_param is None:
        return params
    if sweep_param == "T":
        return SystemParams(params.beta0, params.power, params.altitude,
                            params.max_speed, float(value))
    if sweep_param == "V":
        return SystemParams(params.beta0, params.power, params.altitude,
                            float(value), params.duration)
    raise ConfigError(f"sweep.param: unsupported {sweep_param!r}")
