"""Power model and closed-form segment energies against independent quadrature."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

import shfplan as sp
from shfplan.model import adaptive_simpson, power_slope_bound, received_power_nodes


def _power(params, node_x):
    return lambda x: params.gain / ((x - node_x) ** 2 + params.altitude ** 2)


class TestReceivedPower:
    def test_peak_value(self, params):
        received = sp.received_power(params, 3.0, 3.0)
        assert math.isclose(received, 4.0e-4, rel_tol=1e-12)

    def test_offset_five_metres(self, params):
        assert math.isclose(sp.received_power(params, 3.0, 8.0), 2.0e-4, rel_tol=1e-12)

    def test_large_altitude_limit(self):
        # fixed offset becomes irrelevant as altitude dominates
        p = sp.SystemParams(beta0=1e-3, power=10.0, altitude=1e6, max_speed=1.0, duration=1.0)
        ratio = sp.received_power(p, 0.0, 5.0) / (p.gain / p.altitude ** 2)
        assert math.isclose(ratio, 1.0, rel_tol=1e-10)

    def test_symmetry_and_monotonicity(self, params):
        offsets = np.linspace(0.0, 30.0, 200)
        left = received_power_nodes(params, -offsets + 7.0, 7.0)
        right = received_power_nodes(params, offsets + 7.0, 7.0)
        # 7.0 +- o round differently, so allow a few ulps
        np.testing.assert_allclose(left, right, rtol=1e-14)
        assert np.all(np.diff(right) < 0.0)

    def test_positive_everywhere(self, params):
        assert sp.received_power(params, 0.0, 1e4) > 0.0


class TestCruiseEnergy:
    def test_symmetric_pass(self, params):
        # node mid-segment: 0.004 * atan(2)
        got = sp.cruise_energy(params, 10.0, 0.0, 20.0, 1.0)
        assert math.isclose(got, 0.004 * math.atan(2.0), rel_tol=1e-15)
        assert math.isclose(got, 4.42859e-3, rel_tol=1e-5)

    def test_zero_length(self, params):
        assert sp.cruise_energy(params, 4.0, 2.0, 2.0, 1.0) == 0.0

    def test_half_speed_quarter_turn(self, params):
        # atan(1) - atan(-1) = pi/2 at half speed
        got = sp.cruise_energy(params, 5.0, 0.0, 10.0, 0.5)
        assert math.isclose(got, 0.004 * math.pi / 2.0, rel_tol=1e-15)

    def test_rejects_bad_arguments(self, params):
        with pytest.raises(ValueError):
            sp.cruise_energy(params, 0.0, 1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            sp.cruise_energy(params, 0.0, 0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            sp.cruise_energy(params, 0.0, 0.0, 1.0, -2.0)

    def test_matches_adaptive_quadrature(self, params):
        rng = np.random.default_rng(7)
        for _ in range(40):
            node = rng.uniform(-5.0, 25.0)
            a = rng.uniform(-5.0, 20.0)
            b = a + rng.uniform(0.0, 15.0)
            speed = rng.uniform(0.05, 1.0)
            closed = sp.cruise_energy(params, node, a, b, speed)
            ref, err = quad(_power(params, node), a, b, epsabs=1e-14, epsrel=1e-12)
            assert math.isclose(closed, ref / speed, rel_tol=1e-9)

    def test_matches_simpson_fallback(self, params):
        f = _power(params, 8.0)
        ref = adaptive_simpson(f, 1.0, 14.0, tol=1e-13)
        assert math.isclose(sp.cruise_energy(params, 8.0, 1.0, 14.0, 1.0), ref, rel_tol=1e-9)

    def test_additive_over_split(self, params):
        rng = np.random.default_rng(11)
        for _ in range(30):
            a = rng.uniform(-5.0, 10.0)
            b = a + rng.uniform(0.0, 10.0)
            m = rng.uniform(a, b)
            v = rng.uniform(0.1, 1.0)
            whole = sp.cruise_energy(params, 3.0, a, b, v)
            parts = sp.cruise_energy(params, 3.0, a, m, v) + sp.cruise_energy(params, 3.0, m, b, v)
            assert math.isclose(whole, parts, rel_tol=0.0, abs_tol=1e-15)


class TestHoverEnergy:
    def test_on_node(self, params):
        assert math.isclose(sp.hover_energy(params, 3.0, 3.0, 20.0), 8.0e-3, rel_tol=1e-12)

    def test_zero_duration(self, params):
        assert sp.hover_energy(params, 3.0, 9.0, 0.0) == 0.0

    def test_offset(self, params):
        assert math.isclose(sp.hover_energy(params, 3.0, 8.0, 10.0), 2.0e-3, rel_tol=1e-12)

    def test_linear_in_duration(self, params):
        e1 = sp.hover_energy(params, 1.0, 4.0, 3.0)
        e2 = sp.hover_energy(params, 1.0, 4.0, 6.0)
        assert math.isclose(e2, 2.0 * e1, rel_tol=1e-15)

    def test_rejects_negative_duration(self, params):
        with pytest.raises(ValueError):
            sp.hover_energy(params, 0.0, 0.0, -1.0)


class TestValidation:
    @pytest.mark.parametrize("field", ["beta0", "power", "altitude", "max_speed", "duration"])
    def test_params_must_be_positive(self, field):
        values = dict(beta0=1e-3, power=10.0, altitude=5.0, max_speed=1.0, duration=20.0)
        values[field] = 0.0
        with pytest.raises(ValueError):
            sp.SystemParams(**values)

    def test_topology_sorted(self):
        with pytest.raises(ValueError):
            sp.Topology((3.0, 1.0))
        with pytest.raises(ValueError):
            sp.Topology(())
        assert sp.Topology((1.0, 1.0, 2.0)).k == 3


def test_power_slope_bound_is_global_max(params):
    xs = np.linspace(-40.0, 40.0, 400001)
    d = xs
    slope = np.abs(-2.0 * params.gain * d / (d * d + params.altitude ** 2) ** 2)
    assert slope.max() <= power_slope_bound(params) * (1.0 + 1e-9)
    # attained near offset H/sqrt(3)
    assert math.isclose(slope.max(), power_slope_bound(params), rel_tol=1e-6)


def test_adaptive_simpson_known_integral():
    got = adaptive_simpson(math.sin, 0.0, math.pi, tol=1e-13)
    assert math.isclose(got, 2.0, rel_tol=1e-11)
    assert adaptive_simpson(math.sin, 1.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        adaptive_simpson(math.sin, 1.0, 0.0)
