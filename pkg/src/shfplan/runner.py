"""Experiment execution: single solves, sweeps, verification, self-tests.

Writes the delimited outputs (summary rows, per-trial sweep rows, per-value
averages, trajectory traces) and renders the companion figures. All numbers
are written with 12 significant digits; reruns with identical configs are
byte-identical unless wall-clock timings are explicitly enabled.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import heuristic_shf, sample_midpoints, sca_refine, slot_count
from .config import ExperimentConfig, params_with_sweep, topology_for_trial
from .model import SystemParams, Topology
from .oracle import GridSpec, dp_certified_slack, dp_weighted_max, multistart_lower_bound
from .planner import plan, speed_free_solution
from .trajectory import Hover, trace_rows

__all__ = ["run_solve", "run_sweep", "run_verify", "run_selftest"]

SUMMARY_COLUMNS = (
    "sweep_value", "trial", "seed", "algorithm", "min_energy_j",
    "runtime_s", "gap", "hover_count", "x_i", "x_f",
)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


@dataclass
class CellResult:
    algorithm: str
    min_energy: float
    runtime: float
    gap: float | None
    hover_count: int | None
    x_i: float | None
    x_f: float | None
    trace: np.ndarray | None


def _schedule_trace(points, durations, duration_total) -> np.ndarray:
    """Step-style (t, x) rows for a hover schedule without flight segments."""
    rows = []
    t = 0.0
    if len(points) == 0:
        return np.zeros((0, 2))
    for p, d in zip(points, durations):
        rows.append((t, float(p)))
        t += float(d)
        rows.append((t, float(p)))
    if t < duration_total:
        rows.append((duration_total, float(points[-1])))
    return np.asarray(rows)


def _quantized_trace(qt) -> np.ndarray:
    m = qt.positions.size
    ts = (np.arange(m) + 0.5) * qt.dt
    return np.column_stack([ts, qt.positions])


def _sca_dt(params: SystemParams, planner_cfg) -> float:
    """Slot length for the SCA baseline: finest planner resolution over V."""
    res = planner_cfg.refine if planner_cfg.refine > 0.0 else planner_cfg.d_min
    dt = res / params.max_speed
    # keep the slot count sane for very slow or very long missions
    m = params.duration / dt
    if m > 20000:
        dt = params.duration / 20000
    slot_count(params, dt)
    return dt


def run_cell(params: SystemParams, topo: Topology, algorithms, planner_cfg,
             dt_trace: float):
    """Run the requested algorithms on one instance; returns CellResults.

    The SCA baseline reports the better (by exact energy) of its refinement
    and its heuristic initialisation, so refinement never looks worse than
    its own starting point.
    """
    results = []
    need_heuristic = "heuristic" in algorithms or "sca" in algorithms
    h_traj = h_energies = None
    if need_heuristic:
        t0 = time.perf_counter()
        h_traj, h_energies = heuristic_shf(params, topo)
        h_runtime = time.perf_counter() - t0
    for algo in algorithms:
        if algo == "optimal":
            t0 = time.perf_counter()
            rep = plan(params, topo, planner_cfg)
            rt = time.perf_counter() - t0
            results.append(CellResult(
                algorithm="optimal", min_energy=rep.min_energy, runtime=rt,
                gap=rep.certificate.gap,
                hover_count=rep.trajectory.hover_count(),
                x_i=rep.best_window[0], x_f=rep.best_window[1],
                trace=trace_rows(rep.trajectory, dt_trace),
            ))
        elif algo == "heuristic":
            hovers = [s for s in h_traj.segments if isinstance(s, Hover)]
            results.append(CellResult(
                algorithm="heuristic", min_energy=float(h_energies.min()),
                runtime=h_runtime, gap=None, hover_count=len(hovers),
                x_i=h_traj.start, x_f=h_traj.end,
                trace=trace_rows(h_traj, dt_trace),
            ))
        elif algo == "sca":
            dt = _sca_dt(params, planner_cfg)
            t0 = time.perf_counter()
            init = sample_midpoints(h_traj, params, dt)
            qt, energies, _curve = sca_refine(params, topo, dt, init=init)
            rt = time.perf_counter() - t0
            if float(energies.min()) >= float(h_energies.min()):
                value, trace = float(energies.min()), _quantized_trace(qt)
            else:
                value, trace = float(h_energies.min()), trace_rows(h_traj, dt_trace)
            results.append(CellResult(
                algorithm="sca", min_energy=value, runtime=rt,
                gap=None, hover_count=None,
                x_i=float(qt.positions.min()), x_f=float(qt.positions.max()),
                trace=trace,
            ))
        elif algo == "upper_bound":
            t0 = time.perf_counter()
            sol = speed_free_solution(params, topo)
            rt = time.perf_counter() - t0
            results.append(CellResult(
                algorithm="upper_bound", min_energy=sol.certificate.dual_value, runtime=rt,
                gap=sol.certificate.gap,
                hover_count=int(sol.schedule.points.size),
                x_i=sol.schedule.window[0], x_f=sol.schedule.window[1],
                trace=_schedule_trace(sol.schedule.points, sol.schedule.durations,
                                      params.duration),
            ))
        else:
            raise ValueError(f"unknown algorithm {algo!r}")
    return results


def _write_rows(path, header, rows):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_trace(path, rows):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("t_seconds", "x_meters"))
        for t, x in rows:
            writer.writerow((_fmt(t), _fmt(x)))


def run_solve(cfg: ExperimentConfig, echo=print) -> dict:
    """Solve one instance with the requested algorithms and write outputs."""
    params = cfg.params
    topo = topology_for_trial(cfg, 0)
    seed = cfg.topology.seed if not cfg.topology.explicit else 0
    cells = run_cell(params, topo, cfg.algorithms, cfg.planner, cfg.output.dt_trace)
    rows = []
    traces = {}
    for cell in cells:
        rows.append((
            "", 0, seed, cell.algorithm, _fmt(cell.min_energy),
            _fmt(cell.runtime if cfg.output.timings else 0.0),
            _fmt(cell.gap), _fmt(cell.hover_count), _fmt(cell.x_i), _fmt(cell.x_f),
        ))
        if cell.trace is not None:
            traces[cell.algorithm] = cell.trace
    _write_rows(cfg.output.summary, SUMMARY_COLUMNS, rows)
    for algo, tr in traces.items():
        _write_trace(Path(cfg.output.traces) / f"{algo}.csv", tr)
    if cfg.output.plots and traces:
        from .plots import trajectory_figure

        trajectory_figure(traces, topo.positions,
                          Path(cfg.output.summary).with_suffix(".png"))
    for cell in cells:
        echo(f"{cell.algorithm}: min energy {cell.min_energy:.6e} J"
             + (f", gap {cell.gap:.2e}" if cell.gap is not None else ""))
    return {c.algorithm: c for c in cells}


def _sweep_cell(args):
    (params_dict, positions, algorithms, planner_cfg, dt_trace, value, trial, seed) = args
    params = SystemParams(**params_dict)
    topo = Topology(positions)
    cells = run_cell(params, topo, algorithms, planner_cfg, dt_trace)
    return value, trial, seed, cells


def run_sweep(cfg: ExperimentConfig, echo=print) -> list:
    """Sweep T or V over seeded trials; write per-trial and averaged CSVs.

    Each trial keeps its topology across all sweep values, so per-value
    averages compare algorithms on the same random drops.
    """
    if cfg.sweep_param is None:
        raise ValueError("config has no sweep section")
    jobs = []
    for value in cfg.sweep_values:
        for trial in range(cfg.trials):
            params = params_with_sweep(cfg.params, cfg.sweep_param, value)
            topo = topology_for_trial(cfg, trial)
            seed = cfg.topology.seed if not cfg.topology.explicit else 0
            jobs.append((
                dict(beta0=params.beta0, power=params.power, altitude=params.altitude,
                     max_speed=params.max_speed, duration=params.duration),
                topo.positions, cfg.algorithms, cfg.planner, cfg.output.dt_trace,
                value, trial, seed,
            ))
    if cfg.planner.parallel > 1:
        with ProcessPoolExecutor(max_workers=cfg.planner.parallel) as pool:
            outcomes = list(pool.map(_sweep_cell, jobs))
    else:
        outcomes = [_sweep_cell(j) for j in jobs]
    outcomes.sort(key=lambda o: (cfg.sweep_values.index(o[0]), o[1]))

    rows = []
    sums: dict = {}
    for value, trial, seed, cells in outcomes:
        for cell in cells:
            rows.append((
                _fmt(value), trial, seed, cell.algorithm, _fmt(cell.min_energy),
                _fmt(cell.runtime if cfg.output.timings else 0.0),
                _fmt(cell.gap), _fmt(cell.hover_count), _fmt(cell.x_i), _fmt(cell.x_f),
            ))
            key = (value, cell.algorithm)
            acc = sums.setdefault(key, [0, 0.0, 0.0])
            acc[0] += 1
            acc[1] += cell.min_energy
            acc[2] += cell.runtime
    _write_rows(cfg.output.csv, SUMMARY_COLUMNS, rows)

    avg_rows = []
    averages: dict = {}
    for value in cfg.sweep_values:
        for algo in cfg.algorithms:
            key = (value, algo)
            if key not in sums:
                continue
            n, esum, tsum = sums[key]
            mean = esum / n
            avg_rows.append((
                _fmt(value), algo, n, _fmt(mean),
                _fmt(tsum / n if cfg.output.timings else 0.0),
            ))
            averages.setdefault(algo, []).append((float(value), mean))
    avg_path = Path(cfg.output.csv).with_name(Path(cfg.output.csv).stem + "_avg.csv")
    _write_rows(avg_path, ("sweep_value", "algorithm", "trials",
                           "mean_min_energy_j", "mean_runtime_s"), avg_rows)
    if cfg.output.plots:
        from .plots import sweep_figure

        sweep_figure(averages, cfg.sweep_param, Path(cfg.output.csv).with_suffix(".png"))
    echo(f"sweep over {cfg.sweep_param}: {len(rows)} rows -> {cfg.output.csv}")
    return rows


def run_verify(cfg: ExperimentConfig, echo=print) -> dict:
    """Sandwich the planner's value between independent bounds.

    Runs the full solve, then the weighted-path DP certificate at the
    reported optimal weights plus its certified discretisation slack (upper
    side) and the multistart refinement bound (lower side). Passes when the
    value sits inside the sandwich.
    """
    params = cfg.params
    topo = topology_for_trial(cfg, 0)
    rep = plan(params, topo, cfg.planner)
    w1, wk = topo.positions[0], topo.positions[-1]
    if wk > w1:
        span = (w1, wk)
    else:
        span = (w1 - 0.5, w1 + 0.5)
    grid = GridSpec(dx=cfg.verify_dx, dt=cfg.verify_dt, span=span)
    dp = dp_weighted_max(params, topo, rep.certificate.weights, grid)
    slack = dp_certified_slack(params, grid)
    lb = multistart_lower_bound(params, topo, cfg.verify_dt,
                                cfg.verify_restarts, cfg.topology.seed)
    upper = dp + slack
    ok = (lb <= rep.min_energy + 1e-12) and (rep.min_energy <= upper + 1e-12)
    width = (upper - lb) / max(rep.min_energy, 1e-300)
    result = dict(value=rep.min_energy, lower=lb, dp=dp, slack=slack,
                  upper=upper, width=width, ok=ok)
    out = Path(cfg.output.summary).with_name("verify.csv")
    _write_rows(out, ("value_j", "lower_j", "dp_j", "slack_j", "upper_j",
                      "width_rel", "ok"),
                [tuple(_fmt(result[k]) for k in
                       ("value", "lower", "dp", "slack", "upper", "width"))
                 + (str(ok).lower(),)])
    echo(f"value {rep.min_energy:.6e} in [{lb:.6e}, {upper:.6e}] "
         f"(width {width * 100:.2f}% of value): {'PASS' if ok else 'FAIL'}")
    return result


def run_selftest(echo=print) -> int:
    """Quick analytic and property checks; returns the failure count."""
    import numpy as np

    from .dual import WindowProblem, time_sharing_lp
    from .model import cruise_energy, hover_energy, received_power
    from .planner import PlannerConfig
    from .trajectory import decompose, energy_vector, random_trajectory
    from .weighted import SimplexWeights, global_maximizers
    from . import _kernels

    params = SystemParams(beta0=1e-3, power=10.0, altitude=5.0,
                          max_speed=1.0, duration=20.0)
    failures = 0

    def check(name, ok):
        nonlocal failures
        echo(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures += 1

    check("peak received power 4e-4 W",
          math.isclose(received_power(params, 3.0, 3.0), 4e-4, rel_tol=1e-12))
    check("cruise energy closed form",
          math.isclose(cruise_energy(params, 10.0, 0.0, 20.0, 1.0),
                       0.004 * math.atan(2.0), rel_tol=1e-12))
    check("hover energy 8e-3 J",
          math.isclose(hover_energy(params, 3.0, 3.0, 20.0), 8e-3, rel_tol=1e-12))

    rng = np.random.Generator(np.random.PCG64(42))
    topo = Topology(tuple(np.sort(rng.uniform(0.0, 20.0, 5))))
    worst = 0.0
    for _ in range(50):
        traj = random_trajectory(params, rng, (0.0, 20.0))
        sweep, rest = decompose(traj, params)
        delta = np.abs(energy_vector(traj, topo, params)
                       - energy_vector(sweep, topo, params)
                       - energy_vector(rest, topo, params)).max()
        worst = max(worst, float(delta))
    check(f"decomposition identity (worst {worst:.2e} J)", worst <= 1e-12)

    ok = True
    for _ in range(20):
        lam = rng.dirichlet(np.ones(5))
        lo = float(rng.uniform(0.0, 10.0))
        hi = float(rng.uniform(lo, 20.0))
        ms = global_maximizers(params, topo, SimplexWeights(lam), (lo, hi))
        ref, _ = _kernels.grid_argmax(topo.as_array(), params.gain,
                                      params.altitude ** 2, lam, lo, hi, 1e-5)
        ok = ok and abs(ms.value - ref) <= 1e-8 * max(ref, 1e-300) + 1e-300
        ok = ok and ms.points.size <= 2 * 5 + 1
    check("weighted maximiser vs dense grid", ok)

    topo2 = Topology((0.0, 10.0))
    prob = WindowProblem(params, topo2, (0.0, 10.0), 10.0, np.zeros(2))
    sched, val = time_sharing_lp(prob, [0.0, 10.0])
    check("hover-time LP equal split",
          np.allclose(sched.durations, [5.0, 5.0]) and math.isclose(val, 2.4e-3, rel_tol=1e-12))

    rep = plan(params, Topology((3.0,)), PlannerConfig())
    check("single-node optimum 8e-3 J",
          math.isclose(rep.min_energy, 8e-3, rel_tol=1e-9))

    echo(f"{6 - failures}/6 checks passed")
    return failures
