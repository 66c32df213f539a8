"""Optimal 1D hover-and-fly UAV trajectories for multi-node RF charging.

Library plus CLI that maximises the minimum energy delivered to a line of
ground nodes under a UAV speed limit, with certified global optimality,
reference baselines, oracle bounds, and a benchmark harness.
"""

from .model import (
    SystemParams,
    Topology,
    received_power,
    cruise_energy,
    hover_energy,
    adaptive_simpson,
)
from .trajectory import (
    Hover,
    Cruise,
    Trajectory,
    HoverSchedule,
    energy_vector,
    decompose,
    assemble_shf,
    trace_rows,
)
from .weighted import (
    SimplexWeights,
    MaximizerSet,
    weighted_power,
    stationary_points,
    global_maximizers,
)
from .dual import (
    WindowProblem,
    DualCertificate,
    WindowSolution,
    InfeasibleWindowError,
    dual_value,
    solve_dual,
    time_sharing_lp,
    solve_window,
)
from .planner import (
    PlannerConfig,
    SolveReport,
    solve_fixed_endpoints,
    plan,
    speed_free_upper_bound,
    speed_free_solution,
)
from .baselines import QuantizedTrajectory, heuristic_shf, sca_refine, sample_midpoints
from .oracle import GridSpec, dp_weighted_max, dp_certified_slack, multistart_lower_bound

__version__ = "0.1.0"

__all__ = [
    "SystemParams",
    "Topology",
    "received_power",
    "cruise_energy",
    "hover_energy",
    "adaptive_simpson",
    "Hover",
    "Cruise",
    "Trajectory",
    "HoverSchedule",
    "energy_vector",
    "decompose",
    "assemble_shf",
    "trace_rows",
    "SimplexWeights",
    "MaximizerSet",
    "weighted_power",
    "stationary_points",
    "global_maximizers",
    "WindowProblem",
    "DualCertificate",
    "WindowSolution",
    "InfeasibleWindowError",
    "dual_value",
    "solve_dual",
    "time_sharing_lp",
    "solve_window",
    "PlannerConfig",
    "SolveReport",
    "solve_fixed_endpoints",
    "plan",
    "speed_free_upper_bound",
    "speed_free_solution",
    "QuantizedTrajectory",
    "heuristic_shf",
    "sca_refine",
    "sample_midpoints",
    "GridSpec",
    "dp_weighted_max",
    "dp_certified_slack",
    "multistart_lower_bound",
    "__version__",
]
