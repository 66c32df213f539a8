"""Grid-DP certificate and multistart lower bound."""

import math

import numpy as np
import pytest

import shfplan as sp
from shfplan.baselines import random_quantized_init
from shfplan.oracle import CELL_CAP


def _aligned_span(node_x, dx, half_cells):
    # place node_x on a cell midpoint: span start at node_x - (j + 0.5) dx
    lo = node_x - (half_cells + 0.5) * dx
    hi = lo + (2 * half_cells + 1) * dx
    return (lo, hi)


class TestGridSpec:
    def test_validation(self, params):
        with pytest.raises(ValueError):
            sp.GridSpec(dx=0.0, dt=0.1, span=(0.0, 1.0))
        with pytest.raises(ValueError):
            sp.GridSpec(dx=0.1, dt=0.1, span=(1.0, 1.0))
        grid = sp.GridSpec(dx=0.05, dt=0.05, span=(0.0, 10.0))
        assert grid.moves_per_step(params) == 1
        bad = sp.GridSpec(dx=0.07, dt=0.05, span=(0.0, 10.0))
        with pytest.raises(ValueError):
            bad.moves_per_step(params)

    def test_cell_cap(self, params):
        topo = sp.Topology((5.0,))
        grid = sp.GridSpec(dx=1e-4, dt=1e-4, span=(0.0, 20.0))
        assert grid.cells() * grid.steps(params) > CELL_CAP
        with pytest.raises(ValueError):
            sp.dp_weighted_max(params, topo, sp.SimplexWeights(np.ones(1)), grid)


class TestDpWeightedMax:
    def test_single_node_stationary_path(self, params):
        # node on a cell midpoint: the best path parks there
        topo = sp.Topology((5.0,))
        grid = sp.GridSpec(dx=0.05, dt=0.05, span=_aligned_span(5.0, 0.05, 100))
        got = sp.dp_weighted_max(params, topo, sp.SimplexWeights(np.ones(1)), grid)
        assert math.isclose(got, 20.0 * 4.0e-4, rel_tol=1e-12)

    def test_vertex_weight_parks_at_that_node(self, params):
        topo = sp.Topology((3.0, 12.0))
        grid = sp.GridSpec(dx=0.05, dt=0.05, span=_aligned_span(3.0, 0.05, 200))
        got = sp.dp_weighted_max(params, topo, sp.SimplexWeights.vertex(2, 0), grid)
        q_cross = sp.received_power(params, 12.0, 3.0)
        assert got >= 20.0 * 4.0e-4 - 1e-12
        assert got <= 20.0 * (4.0e-4 + q_cross) * 0.5 + 20.0 * 4.0e-4  # loose sanity

    def test_requires_span_covering_nodes(self, params):
        topo = sp.Topology((0.0, 10.0))
        grid = sp.GridSpec(dx=0.05, dt=0.05, span=(2.0, 10.0))
        with pytest.raises(ValueError):
            sp.dp_weighted_max(params, topo, sp.SimplexWeights.uniform(2), grid)

    def test_upper_bounds_plan_value(self, params, topo_pair):
        rep = sp.plan(params, topo_pair)
        grid = sp.GridSpec(dx=0.05, dt=0.05, span=(0.0, 10.0))
        dp = sp.dp_weighted_max(params, topo_pair, rep.certificate.weights, grid)
        slack = sp.dp_certified_slack(params, grid)
        assert rep.min_energy <= dp + slack + 1e-15
        assert dp >= rep.min_energy - slack

    def test_nested_grids_monotone(self, params, topo_pair):
        # dividing dx and dt by 3 keeps cell midpoints nested and the move
        # count per step unchanged, so the path set only grows
        lam = sp.SimplexWeights.uniform(2)
        coarse = sp.GridSpec(dx=0.15, dt=0.15, span=(0.0, 10.2))
        fine = sp.GridSpec(dx=0.05, dt=0.05, span=(0.0, 10.2))
        assert coarse.moves_per_step(params) == fine.moves_per_step(params) == 1
        v_coarse = sp.dp_weighted_max(params, topo_pair, lam, coarse)
        v_fine = sp.dp_weighted_max(params, topo_pair, lam, fine)
        assert v_fine >= v_coarse - 1e-15

    def test_slack_formula(self, params):
        grid = sp.GridSpec(dx=0.05, dt=0.05, span=(0.0, 10.0))
        lip = (3.0 * math.sqrt(3.0) / 8.0) * params.gain / params.altitude ** 3
        expect = params.duration * lip * (0.05 + params.max_speed * 0.05) / 2.0
        assert math.isclose(sp.dp_certified_slack(params, grid), expect, rel_tol=1e-12)


class TestMultistart:
    def test_single_node_converges(self, params):
        topo = sp.Topology((3.0,))
        lb = sp.multistart_lower_bound(params, topo, dt=0.05, restarts=4, seed=1)
        assert lb <= 8.0e-3 + 1e-12
        assert lb >= 8.0e-3 * 0.95

    def test_single_restart_equals_sca_from_same_start(self, params, topo_pair):
        rng = np.random.Generator(np.random.PCG64(42))
        init = random_quantized_init(params, topo_pair, 0.1, rng)
        _, energies, _ = sp.sca_refine(params, topo_pair, 0.1, init=init)
        lb = sp.multistart_lower_bound(params, topo_pair, dt=0.1, restarts=1, seed=42)
        assert math.isclose(lb, float(energies.min()), rel_tol=1e-12)

    def test_rejects_zero_restarts(self, params, topo_pair):
        with pytest.raises(ValueError):
            sp.multistart_lower_bound(params, topo_pair, 0.1, restarts=0, seed=0)

    def test_sandwich_containment(self, params, topo_pair):
        rep = sp.plan(params, topo_pair)
        lb = sp.multistart_lower_bound(params, topo_pair, dt=0.05, restarts=8, seed=7)
        grid = sp.GridSpec(dx=0.05, dt=0.05, span=(0.0, 10.0))
        ub = sp.dp_weighted_max(params, topo_pair, rep.certificate.weights, grid) \
            + sp.dp_certified_slack(params, grid)
        assert lb <= rep.min_energy + 1e-12
        assert rep.min_energy <= ub + 1e-12
        # the lower side lands within 1% on this small instance
        assert lb >= rep.min_energy * 0.99
