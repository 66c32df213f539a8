"""Weighted-power maximisation against brute-force grid oracles."""

import math

import numpy as np
import pytest

import shfplan as sp
from shfplan import _kernels


def _grid_max(params, topo, lam, lo, hi, step):
    return _kernels.grid_argmax(topo.as_array(), params.gain,
                                params.altitude ** 2, np.asarray(lam), lo, hi, step)


class TestSimplexWeights:
    def test_validation(self):
        with pytest.raises(ValueError):
            sp.SimplexWeights(np.array([0.5, 0.6]))
        with pytest.raises(ValueError):
            sp.SimplexWeights(np.array([-0.1, 1.1]))
        w = sp.SimplexWeights.uniform(4)
        assert w.k == 4 and math.isclose(w.values.sum(), 1.0)
        v = sp.SimplexWeights.vertex(3, 1)
        assert v.values[1] == 1.0


class TestWeightedPower:
    def test_single_node_equals_power(self, params):
        topo = sp.Topology((4.0,))
        w = sp.SimplexWeights(np.ones(1))
        for x in (-3.0, 4.0, 11.0):
            assert math.isclose(sp.weighted_power(params, topo, w, x),
                                sp.received_power(params, 4.0, x), rel_tol=1e-15)

    def test_vertex_weight_selects_node(self, params):
        topo = sp.Topology((0.0, 10.0, 12.0))
        w = sp.SimplexWeights.vertex(3, 2)
        assert math.isclose(sp.weighted_power(params, topo, w, 6.0),
                            sp.received_power(params, 12.0, 6.0), rel_tol=1e-15)

    def test_even_pair_midpoint(self, params, topo_pair):
        w = sp.SimplexWeights(np.array([0.5, 0.5]))
        assert math.isclose(sp.weighted_power(params, topo_pair, w, 5.0), 2.0e-4,
                            rel_tol=1e-13)


class TestStationaryPoints:
    def test_single_node_peak(self, params):
        topo = sp.Topology((4.0,))
        roots = sp.stationary_points(params, topo, sp.SimplexWeights(np.ones(1)), (0.0, 10.0))
        assert roots.size == 1
        assert abs(roots[0] - 4.0) <= 1e-9

    def test_symmetric_pair_contains_midpoint(self, params):
        topo = sp.Topology((-4.0, 4.0))
        w = sp.SimplexWeights(np.array([0.5, 0.5]))
        roots = sp.stationary_points(params, topo, w, (-6.0, 6.0))
        assert np.any(np.abs(roots) <= 1e-9)
        np.testing.assert_allclose(roots, -roots[::-1], atol=1e-8)
        assert roots.size <= 4 * 2 - 3

    def test_matches_high_resolution_grid_argmax(self, params, topo_pair):
        # the best interior stationary point must coincide with a 1e-7-step
        # exhaustive argmax to within the advertised 1e-6 m
        w = sp.SimplexWeights(np.array([0.5, 0.5]))
        roots = sp.stationary_points(params, topo_pair, w, (0.0, 10.0))
        _, xref = _grid_max(params, topo_pair, w.values, 0.0, 10.0, 1e-7)
        assert np.min(np.abs(roots - xref)) <= 1e-6

    def test_degenerate_window_empty(self, params, topo_pair):
        w = sp.SimplexWeights.uniform(2)
        assert sp.stationary_points(params, topo_pair, w, (3.0, 3.0)).size == 0


class TestGlobalMaximizers:
    def test_single_node(self, params):
        topo = sp.Topology((4.0,))
        ms = sp.global_maximizers(params, topo, sp.SimplexWeights(np.ones(1)), (0.0, 10.0))
        assert ms.points.size == 1
        assert abs(ms.points[0] - 4.0) <= 1e-9
        assert math.isclose(ms.value, params.gain / params.altitude ** 2, rel_tol=1e-12)

    def test_window_right_of_nodes_hits_boundary(self, params, topo_pair):
        w = sp.SimplexWeights.uniform(2)
        ms = sp.global_maximizers(params, topo_pair, w, (15.0, 22.0))
        assert ms.points.size == 1
        assert ms.points[0] == 15.0

    def test_symmetric_pair_ties(self, params, topo_pair):
        w = sp.SimplexWeights(np.array([0.5, 0.5]))
        ms = sp.global_maximizers(params, topo_pair, w, (0.0, 10.0))
        assert ms.points.size == 2
        np.testing.assert_allclose(ms.points[0] + ms.points[1], 10.0, atol=1e-8)
        f0 = sp.weighted_power(params, topo_pair, w, float(ms.points[0]))
        f1 = sp.weighted_power(params, topo_pair, w, float(ms.points[1]))
        assert abs(f0 - f1) <= 1e-9 * ms.value

    def test_random_draws_match_dense_grid(self, params):
        rng = np.random.default_rng(99)
        for _ in range(60):
            k = int(rng.integers(1, 6))
            topo = sp.Topology(tuple(np.sort(rng.uniform(0.0, 20.0, k))))
            lam = rng.dirichlet(np.ones(k))
            lo = float(rng.uniform(-2.0, 18.0))
            hi = lo + float(rng.uniform(0.0, 20.0))
            ms = sp.global_maximizers(params, topo, sp.SimplexWeights(lam), (lo, hi))
            ref, _ = _grid_max(params, topo, lam, lo, hi, 1e-5)
            assert ms.value >= ref - 1e-12
            assert ms.value <= ref * (1.0 + 1e-8) + 1e-300
            assert ms.points.size <= 2 * k + 1
            for p in ms.points:
                assert lo - 1e-12 <= p <= hi + 1e-12

    def test_tie_tolerance_filter(self, params, topo_pair):
        w = sp.SimplexWeights(np.array([0.5, 0.5]))
        wide = sp.global_maximizers(params, topo_pair, w, (0.0, 10.0), tie_tol=0.5)
        narrow = sp.global_maximizers(params, topo_pair, w, (0.0, 10.0), tie_tol=1e-12)
        assert wide.points.size >= narrow.points.size
        for p in narrow.points:
            f = sp.weighted_power(params, topo_pair, w, float(p))
            assert f >= narrow.value * (1.0 - 1e-12)

    def test_rejects_mismatched_weights(self, params, topo_pair):
        with pytest.raises(ValueError):
            sp.global_maximizers(params, topo_pair, sp.SimplexWeights(np.ones(1)), (0.0, 1.0))
        with pytest.raises(ValueError):
            sp.stationary_points(params, topo_pair, sp.SimplexWeights.uniform(2), (5.0, 1.0))
