"""Window dual solve: dual function, ellipsoid, primal recovery, certificates."""

import math

import numpy as np
import pytest

import shfplan as sp


class TestWindowProblem:
    def test_budget_and_sweep(self, params, topo_pair):
        problem = sp.WindowProblem.for_window(params, topo_pair, (0.0, 10.0))
        assert math.isclose(problem.hover_budget, 10.0)
        expect = sp.model.cruise_energy_nodes(params, topo_pair.as_array(), 0.0, 10.0, 1.0)
        np.testing.assert_allclose(problem.sweep_energy, expect)

    def test_infeasible_window(self, params):
        topo = sp.Topology((0.0, 30.0))
        with pytest.raises(sp.InfeasibleWindowError):
            sp.WindowProblem.for_window(params, topo, (0.0, 30.0))

    def test_speed_free(self, params, topo_pair):
        problem = sp.WindowProblem.speed_free(params, topo_pair)
        assert problem.hover_budget == params.duration
        np.testing.assert_array_equal(problem.sweep_energy, np.zeros(2))


class TestDualValue:
    def test_single_node_independent_of_weights(self, params):
        topo = sp.Topology((4.0,))
        problem = sp.WindowProblem.for_window(params, topo, (2.0, 6.0))
        value, sub, ms = sp.dual_value(problem, sp.SimplexWeights(np.ones(1)))
        expect = problem.sweep_energy[0] + problem.hover_budget * 4.0e-4
        assert math.isclose(value, expect, rel_tol=1e-12)
        assert abs(ms.points[0] - 4.0) <= 1e-9
        assert math.isclose(sub[0], expect, rel_tol=1e-12)

    def test_degenerate_window_vertex(self, params):
        topo = sp.Topology((4.0,))
        problem = sp.WindowProblem.for_window(params, topo, (4.0, 4.0))
        value, _, _ = sp.dual_value(problem, sp.SimplexWeights(np.ones(1)))
        assert math.isclose(value, 20.0 * 4.0e-4, rel_tol=1e-12)

    def test_symmetric_pair_minimised_at_even_weights(self, params, topo_pair):
        problem = sp.WindowProblem.for_window(params, topo_pair, (0.0, 10.0))
        centre, _, _ = sp.dual_value(problem, sp.SimplexWeights(np.array([0.5, 0.5])))
        for t in np.linspace(0.0, 1.0, 101):
            v, _, _ = sp.dual_value(problem, sp.SimplexWeights(np.array([t, 1.0 - t])))
            assert v >= centre - 1e-15

    def test_convexity_along_segment(self, params):
        topo = sp.Topology((1.0, 6.0, 9.0))
        problem = sp.WindowProblem.for_window(params, topo, (0.0, 9.0))
        a = np.array([0.7, 0.2, 0.1])
        b = np.array([0.1, 0.3, 0.6])
        va, _, _ = sp.dual_value(problem, sp.SimplexWeights(a))
        vb, _, _ = sp.dual_value(problem, sp.SimplexWeights(b))
        for t in (0.25, 0.5, 0.75):
            vm, _, _ = sp.dual_value(problem, sp.SimplexWeights(t * a + (1 - t) * b))
            assert vm <= t * va + (1 - t) * vb + 1e-15

    def test_subgradient_inequality(self, params):
        # convexity: f(mu) >= f(lam) + g.(mu - lam)
        topo = sp.Topology((2.0, 5.0, 11.0))
        problem = sp.WindowProblem.for_window(params, topo, (1.0, 12.0))
        rng = np.random.default_rng(3)
        for _ in range(25):
            lam = rng.dirichlet(np.ones(3))
            mu = rng.dirichlet(np.ones(3))
            f_lam, g, _ = sp.dual_value(problem, sp.SimplexWeights(lam))
            f_mu, _, _ = sp.dual_value(problem, sp.SimplexWeights(mu))
            assert f_mu >= f_lam + g @ (mu - lam) - 1e-14


class TestSolveDual:
    def test_single_node_trivial(self, params):
        topo = sp.Topology((4.0,))
        problem = sp.WindowProblem.for_window(params, topo, (2.0, 6.0))
        weights, diag = sp.solve_dual(problem)
        assert weights.values[0] == 1.0
        assert diag.iterations == 0

    def test_symmetric_pair_even_weights(self, params, topo_pair):
        problem = sp.WindowProblem.for_window(params, topo_pair, (0.0, 10.0))
        weights, _ = sp.solve_dual(problem)
        np.testing.assert_allclose(weights.values, [0.5, 0.5], atol=1e-6)

    def test_beats_monte_carlo_envelope(self, params):
        topo = sp.Topology((2.0, 9.0, 13.0))
        problem = sp.WindowProblem.for_window(params, topo, (1.0, 14.0))
        weights, diag = sp.solve_dual(problem)
        rng = np.random.default_rng(21)
        for _ in range(1000):
            lam = rng.dirichlet(np.ones(3))
            v, _, _ = sp.dual_value(problem, sp.SimplexWeights(lam))
            assert diag.best_value <= v + 1e-12

    def test_warm_start_converges(self, params, topo_pair):
        problem = sp.WindowProblem.for_window(params, topo_pair, (0.0, 10.0))
        cold, _ = sp.solve_dual(problem)
        warm, diag = sp.solve_dual(problem, warm=cold)
        np.testing.assert_allclose(warm.values, cold.values, atol=1e-6)


class TestSolveWindow:
    def test_degenerate_single_node(self, params):
        topo = sp.Topology((4.0,))
        problem = sp.WindowProblem.for_window(params, topo, (4.0, 4.0))
        sol = sp.solve_window(problem)
        assert math.isclose(sol.min_energy, 8.0e-3, rel_tol=1e-12)
        np.testing.assert_allclose(sol.schedule.points, [4.0])
        np.testing.assert_allclose(sol.schedule.durations, [20.0])
        assert sol.certificate.gap <= 1e-9

    def test_symmetric_pair_schedule(self, params, topo_pair):
        problem = sp.WindowProblem.for_window(params, topo_pair, (0.0, 10.0))
        sol = sp.solve_window(problem)
        assert sol.certificate.gap <= 1e-9
        assert abs(sol.energies[0] - sol.energies[1]) <= 1e-12
        np.testing.assert_allclose(sol.schedule.points[0] + sol.schedule.points[-1],
                                   10.0, atol=1e-6)
        np.testing.assert_allclose(sol.schedule.durations.sum(),
                                   problem.hover_budget, atol=1e-9)

    def test_certificate_weak_duality(self, params):
        rng = np.random.default_rng(8)
        for _ in range(8):
            k = int(rng.integers(1, 6))
            topo = sp.Topology(tuple(np.sort(rng.uniform(0.0, 18.0, k))))
            lo = float(rng.uniform(topo.positions[0], topo.positions[-1]))
            hi = min(float(lo + rng.uniform(0.0, 15.0)), topo.positions[-1])
            problem = sp.WindowProblem.for_window(params, topo, (lo, hi))
            sol = sp.solve_window(problem)
            cert = sol.certificate
            assert cert.primal_value <= cert.dual_value + 1e-12
            assert cert.gap <= 1e-4
            assert math.isclose(cert.primal_value, sol.min_energy, rel_tol=1e-15)
            assert math.isclose(sol.min_energy, sol.energies.min(), rel_tol=1e-15)

    def test_schedule_size_bound(self, params):
        rng = np.random.default_rng(12)
        for _ in range(6):
            k = int(rng.integers(2, 6))
            topo = sp.Topology(tuple(np.sort(rng.uniform(0.0, 15.0, k))))
            problem = sp.WindowProblem.for_window(
                params, topo, (topo.positions[0], topo.positions[-1]))
            sol = sp.solve_window(problem)
            assert sol.schedule.points.size <= 2 * k + 1
            assert np.all(sol.schedule.durations > 0.0)

    def test_budget_monotonicity(self, params, topo_pair):
        values = []
        for budget in (0.0, 2.0, 5.0, 10.0, 15.0):
            problem = sp.WindowProblem(params, topo_pair, (0.0, 10.0), budget,
                                       sp.model.cruise_energy_nodes(
                                           params, topo_pair.as_array(), 0.0, 10.0, 1.0))
            values.append(sp.solve_window(problem).min_energy)
        assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))

    def test_iterate_log_weak_duality(self, params, tmp_path):
        topo = sp.Topology((2.0, 7.0, 12.0))
        problem = sp.WindowProblem.for_window(params, topo, (2.0, 12.0))
        log = tmp_path / "iterates.csv"
        sol = sp.solve_window(problem, log_path=log)
        rows = log.read_text().strip().splitlines()
        assert rows[0] == "iter,dual_value,primal_value,gap"
        assert len(rows) > 10
        for line in rows[1:]:
            _, dual, primal, _ = line.split(",")
            assert float(primal) <= float(dual) + 1e-12

    def test_extra_candidates_dominate_known_allocation(self, params, topo_pair):
        problem = sp.WindowProblem.for_window(params, topo_pair, (0.0, 10.0))
        pts = np.array([1.0, 9.0])
        taus = np.full(2, problem.hover_budget / 2.0)
        manual = problem.sweep_energy.copy()
        for p, t in zip(pts, taus):
            manual = manual + t * sp.model.received_power_nodes(params, topo_pair.as_array(), p)
        sol = sp.solve_window(problem, extra_candidates=pts)
        assert sol.min_energy >= manual.min() - 1e-15
