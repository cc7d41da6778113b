"""Core-math checks: tail function against quadrature, potential derivatives
against finite differences, closed-form single-body minimum against brute
force."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from onebit_cs.potentials import (f_pot, f_prime, f_second, g_pot, g_prime,
                                  g_second, gauss_tail, phi, phi_minimizer,
                                  soft_threshold)


def _gauss_density(z):
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


class TestGaussTail:
    def test_symmetry_at_zero(self):
        assert gauss_tail(0.0) == pytest.approx(0.5, abs=1e-15)

    def test_reflection_identity(self):
        for x in np.linspace(-6, 6, 41):
            assert gauss_tail(x) + gauss_tail(-x) == pytest.approx(1.0, abs=1e-12)

    def test_against_quadrature(self):
        # independent oracle: adaptive quadrature of the density on [x, 40]
        for x in (0.3, 1.0, 2.5, 5.0, 8.5, 12.0):
            ref, err = quad(_gauss_density, x, 40.0)
            assert abs(gauss_tail(x) - ref) <= max(1e-12, 10 * err)

    def test_value_at_one(self):
        ref, _ = quad(_gauss_density, 1.0, 40.0)
        assert gauss_tail(1.0) == pytest.approx(ref, abs=1e-12)
        assert gauss_tail(1.0) == pytest.approx(0.158655, abs=1e-6)

    def test_strictly_decreasing(self):
        # strict decrease where float64 can resolve it; the far-left tail
        # saturates at 1 - eps and adjacent values collide
        xs = np.linspace(-5, 5, 101)
        vals = gauss_tail(xs)
        assert np.all(np.diff(vals) < 0)
        tail = gauss_tail(np.array([6.0, 7.0, 8.0, 8.5, 9.0, 12.0, 20.0, 30.0]))
        assert np.all(np.diff(tail) < 0)

    def test_range_open_unit_interval(self):
        # open (0,1) wherever float64 can represent it; the far-left tail
        # saturates at the nearest double, 1.0
        for x in (-8.0, 0.0, 8.0, 30.0, 37.0):
            assert 0.0 < gauss_tail(x) < 1.0
        assert gauss_tail(-37.0) <= 1.0

    def test_vectorized_matches_scalar(self):
        xs = np.array([-2.0, 0.0, 3.5, 9.0])
        np.testing.assert_allclose(gauss_tail(xs), [gauss_tail(float(x)) for x in xs],
                                   rtol=0, atol=0)


class TestOneSidedQuadratic:
    def test_branch_values(self):
        assert f_prime(-2.0) == -2.0
        assert f_prime(3.0) == 0.0
        assert f_prime(0.0) == 0.0
        assert f_second(-0.5) == 1.0
        assert f_second(0.0) == 0.0
        assert f_pot(-2.0) == 2.0
        assert f_pot(1.0) == 0.0

    def test_prime_matches_finite_difference(self):
        h = 1e-6
        rng = np.random.default_rng(7)
        pts = rng.uniform(-3, 3, 200)
        pts = pts[np.abs(pts) > 1e-3]  # stay off the kink
        for u in pts:
            fd = (f_pot(u + h) - f_pot(u - h)) / (2 * h)
            assert f_prime(u) == pytest.approx(fd, abs=1e-5)


class TestShrinkagePotential:
    def test_examples(self):
        assert g_prime(2.5) == pytest.approx(1.5)
        assert g_prime(-0.3) == 0.0
        assert g_prime(-1.7) == pytest.approx(-0.7)
        assert g_second(0.5) == 0.0
        assert g_second(1.0) == 0.0
        assert g_second(1.5) == 1.0

    def test_prime_matches_finite_difference(self):
        h = 1e-6
        rng = np.random.default_rng(11)
        pts = rng.uniform(-4, 4, 300)
        pts = pts[np.abs(np.abs(pts) - 1.0) > 1e-3]  # off the kinks at +-1
        for u in pts:
            fd = (g_pot(u + h) - g_pot(u - h)) / (2 * h)
            assert g_prime(u) == pytest.approx(fd, abs=1e-5)

    def test_unit_threshold_equivalence(self):
        xs = np.linspace(-5, 5, 101)
        np.testing.assert_allclose(soft_threshold(xs, 1.0), g_prime(xs), atol=0)


class TestSoftThreshold:
    def test_examples(self):
        assert soft_threshold(2.0, 0.5) == pytest.approx(1.5)
        assert soft_threshold(0.4, 0.5) == 0.0
        assert soft_threshold(-2.0, 1.0) == pytest.approx(-1.0)

    def test_rejects_nonpositive_threshold(self):
        with pytest.raises(ValueError):
            soft_threshold(1.0, 0.0)
        with pytest.raises(ValueError):
            soft_threshold(1.0, -0.1)

    def test_odd(self):
        rng = np.random.default_rng(3)
        for h in rng.uniform(-5, 5, 100):
            assert soft_threshold(-h, 0.7) == pytest.approx(-soft_threshold(h, 0.7), abs=0)

    def test_nonexpansive(self):
        rng = np.random.default_rng(5)
        a = rng.uniform(-5, 5, 500)
        b = rng.uniform(-5, 5, 500)
        for t in (0.1, 1.0, 3.0):
            lhs = np.abs(soft_threshold(a, t) - soft_threshold(b, t))
            assert np.all(lhs <= np.abs(a - b) + 1e-15)


class TestSingleBodyMinimum:
    def test_dead_zone_and_closed_form(self):
        assert phi(0.5, 1.0) == 0.0
        assert phi(2.0, 1.0) == pytest.approx(-0.5)

    def test_rejects_nonpositive_curvature(self):
        with pytest.raises(ValueError):
            phi(1.0, 0.0)
        with pytest.raises(ValueError):
            phi_minimizer(1.0, -1.0)

    def test_nonpositive_and_even(self):
        ws = np.linspace(-4, 4, 81)
        for qb in (0.5, 1.0, 2.0):
            vals = phi(ws, qb)
            assert np.all(vals <= 0.0)
            np.testing.assert_allclose(vals, phi(-ws, qb), atol=0)

    def test_brute_force_minimization(self):
        # oracle: dense grid minimization of (Q/2) x^2 - w x + |x|
        xs = np.arange(-20.0, 20.0 + 1e-9, 1e-4)
        for qb in (0.5, 1.0, 2.0):
            cost_base = 0.5 * qb * xs * xs + np.abs(xs)
            for w in np.linspace(-4, 4, 33):
                cost = cost_base - w * xs
                j = int(np.argmin(cost))
                assert phi(w, qb) == pytest.approx(float(cost[j]), abs=1e-6)
                assert phi_minimizer(w, qb) == pytest.approx(float(xs[j]), abs=1e-3)
