"""Replica-symmetric solver: fixed-point residuals, free-energy stationarity,
Monte-Carlo oracles for the averages and error probabilities, the stability
factor re-derived by quadrature, and the independent extremization route."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from onebit_cs.potentials import g_prime, gauss_tail, phi
from onebit_cs.theory import (RSFixedPoint, RSParams, phi_average,
                              rs_free_energy, rs_predict, rs_solve,
                              rs_solve_by_extremization, rs_stability,
                              rs_update)


def solve(alpha, rho):
    return rs_solve(RSParams(alpha=alpha, rho=rho))


class TestBracket:
    def test_against_high_precision(self):
        # oracle: 50-digit evaluation of (s+1) H(1/sqrt s) - sqrt(s/2pi) e^{-1/2s}
        import mpmath as mp
        from onebit_cs.theory import _bracket
        mp.mp.dps = 50
        for s in (1e-3, 5e-3, 0.0099, 0.0101, 0.02, 0.1, 0.5, 1.0, 5.0, 50.0):
            ms = mp.mpf(s)
            a = 1 / mp.sqrt(ms)
            ref = float((ms + 1) * mp.erfc(a / mp.sqrt(2)) / 2
                        - mp.sqrt(ms / (2 * mp.pi)) * mp.exp(-1 / (2 * ms)))
            assert _bracket(s) == pytest.approx(ref, rel=1e-10)

    def test_rejects_nonpositive(self):
        from onebit_cs.theory import _bracket
        with pytest.raises(ValueError):
            _bracket(0.0)


class TestUpdate:
    def test_full_overlap_kills_conjugates(self):
        # approaching m = sqrt(rho), both conjugate updates vanish
        rho = 0.125
        p = RSFixedPoint(m=math.sqrt(rho) * (1 - 1e-4), chi=1.0, q_hat=1.0,
                         m_hat=1.0, q_big_hat=1.0)
        out = rs_update(p, RSParams(alpha=3.0, rho=rho), damping=1.0)
        assert out.q_hat == pytest.approx(0.0, abs=1e-4)
        assert out.m_hat == pytest.approx(0.0, abs=0.05)
        # at the boundary itself the sweep is singular and says so
        p_edge = RSFixedPoint(m=math.sqrt(rho) * (1 - 1e-15), chi=1.0, q_hat=1.0,
                              m_hat=1.0, q_big_hat=1.0)
        with pytest.raises(FloatingPointError):
            rs_update(p_edge, RSParams(alpha=3.0, rho=rho), damping=1.0)

    def test_rejects_bad_state(self):
        with pytest.raises(ValueError):
            rs_update(RSFixedPoint(m=0.1, chi=-1.0, q_hat=1.0, m_hat=1.0,
                                   q_big_hat=1.0), RSParams(alpha=1.0, rho=0.1))


class TestSolve:
    def test_residual_below_tolerance(self):
        for alpha, rho in ((1.0, 0.125), (3.0, 0.25), (5.5, 0.03125)):
            pt = solve(alpha, rho)
            assert pt.converged
            assert pt.residual < 1e-12
            assert 0.0 < pt.m < math.sqrt(rho)
            assert pt.chi > 0 and pt.q_hat > 0 and pt.q_big_hat > 0

    def test_overlap_nondecreasing_in_alpha(self):
        rho = 0.125
        ms = [solve(a, rho).m for a in np.arange(0.5, 6.01, 0.5)]
        assert all(b >= a - 1e-10 for a, b in zip(ms, ms[1:]))

    def test_multistart_agreement(self):
        params = RSParams(alpha=2.0, rho=0.125)
        base = rs_solve(params)
        far = RSFixedPoint(m=0.01 * math.sqrt(0.125), chi=5.0, q_hat=2.0,
                           m_hat=0.3, q_big_hat=0.2)
        again = rs_solve(params, init=far)
        for field in ("m", "chi", "q_hat", "m_hat", "q_big_hat"):
            assert getattr(again, field) == pytest.approx(getattr(base, field), abs=1e-8)


class TestFreeEnergy:
    def test_stationarity_at_fixed_point(self):
        for alpha, rho in ((2.0, 0.125), (4.0, 0.25)):
            pt = solve(alpha, rho)
            params = RSParams(alpha=alpha, rho=rho)
            x = np.array([pt.chi, pt.m, pt.q_hat, pt.m_hat, pt.q_big_hat])
            for i in range(5):
                h = 1e-6 * max(1.0, abs(x[i]))
                xp, xm = x.copy(), x.copy()
                xp[i] += h
                xm[i] -= h
                d = (rs_free_energy(*xp, params) - rs_free_energy(*xm, params)) / (2 * h)
                assert abs(d) < 1e-5

    def test_phi_average_monte_carlo(self):
        # oracle: sample x0 from the sparse prior and z standard normal,
        # average the closed-form single-body minimum directly
        rho, q_hat, m_hat, q_big = 0.25, 0.4, 1.3, 0.8
        rng = np.random.default_rng(123)
        nsamp = 10_000_000
        z = rng.standard_normal(nsamp)
        x0 = np.where(rng.random(nsamp) < rho, rng.standard_normal(nsamp), 0.0)
        w = math.sqrt(q_hat) * z + m_hat * x0
        vals = phi(w, q_big)
        mc = vals.mean()
        se = vals.std(ddof=1) / math.sqrt(nsamp)
        closed = phi_average(q_hat, m_hat, q_big, rho)
        assert abs(closed - mc) < 3 * se

    def test_phi_average_vanishes_in_dead_zone_limit(self):
        # m_hat = 0 and q_hat -> 0+: the field never leaves |w| < 1
        assert phi_average(1e-10, 0.0, 1.0, 0.25) == pytest.approx(0.0, abs=1e-12)

    def test_free_energy_domain_errors(self):
        params = RSParams(alpha=1.0, rho=0.1)
        with pytest.raises(ValueError):
            rs_free_energy(-1.0, 0.1, 1.0, 1.0, 1.0, params)
        with pytest.raises(ValueError):
            rs_free_energy(1.0, 0.9, 1.0, 1.0, 1.0, params)  # m^2 > rho


class TestExtremizationOracle:
    def test_matches_production_solver(self):
        params = RSParams(alpha=2.0, rho=0.125)
        direct = rs_solve_by_extremization(params)
        assert direct.converged
        prod = rs_solve(params)
        assert direct.m == pytest.approx(prod.m, abs=1e-4)


class TestStability:
    def test_unstable_on_sample_grid(self):
        for rho in (1 / 32, 1 / 4):
            for alpha in (0.5, 3.0, 6.0):
                pt = solve(alpha, rho)
                at, stable = rs_stability(pt, RSParams(alpha=alpha, rho=rho))
                assert not stable
                assert at > 0

    def test_factor_matches_quadrature_product(self):
        # re-derive the replicon factor from the two perturbation responses:
        # (1/Qhat^2) <(g'')^2> x (2 alpha / chi^2) int Dz H(m z / sqrt(rho-m^2)) f''(-z)^2
        for alpha, rho in ((2.0, 0.125), (4.0, 0.25)):
            params = RSParams(alpha=alpha, rho=rho)
            pt = solve(alpha, rho)
            # prior response: dead-zone escape mass, via 1-D quadrature over
            # the field magnitude on each site class
            def dens(w, var):
                return math.exp(-0.5 * w * w / var) / math.sqrt(2 * math.pi * var)

            mass0, _ = quad(lambda w: dens(w, pt.q_hat), 1.0, 60.0)
            mass1, _ = quad(lambda w: dens(w, pt.q_hat + pt.m_hat ** 2), 1.0, 60.0)
            prior_resp = ((1.0 - rho) * 2 * mass0 + rho * 2 * mass1) / pt.q_big_hat ** 2
            a_geom = pt.m / math.sqrt(rho - pt.m ** 2)
            chan, _ = quad(lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
                           * gauss_tail(a_geom * z), 0.0, 40.0)
            chan_resp = 2.0 * alpha / pt.chi ** 2 * chan
            product = prior_resp * chan_resp
            at, _ = rs_stability(pt, params)
            assert product - 1.0 == pytest.approx(at, abs=1e-7)
            assert (product > 1.0) == (at > 0.0)


class TestPredict:
    def test_boundary_identities(self):
        rho = 0.125
        pred = rs_predict(RSParams(alpha=3.0, rho=rho))
        assert pred.mse == pytest.approx(2.0 * (1.0 - pred.direction_cosine), abs=1e-12)
        assert 0.0 <= pred.mse <= 2.0
        assert 0.0 < pred.fp < 1.0
        assert 0.0 < pred.fn_ < 1.0

    def test_fp_fn_monte_carlo(self):
        # oracle: the single-body minimizer g'(w)/Qhat sampled over (z, x0)
        params = RSParams(alpha=3.0, rho=0.125)
        pt = rs_solve(params)
        pred = rs_predict(params)
        rng = np.random.default_rng(77)
        nsamp = 1_000_000
        z = rng.standard_normal(nsamp)
        zero_sites = g_prime(math.sqrt(pt.q_hat) * z) / pt.q_big_hat
        fp_mc = float((zero_sites != 0).mean())
        fp_se = math.sqrt(fp_mc * (1 - fp_mc) / nsamp)
        assert abs(pred.fp - fp_mc) < 3 * fp_se + 1e-9
        x0 = rng.standard_normal(nsamp)
        nz_sites = g_prime(math.sqrt(pt.q_hat) * z + pt.m_hat * x0) / pt.q_big_hat
        fn_mc = float((nz_sites == 0).mean())
        fn_se = math.sqrt(fn_mc * (1 - fn_mc) / nsamp)
        assert abs(pred.fn_ - fn_mc) < 3 * fn_se + 1e-9

    def test_mse_limits(self):
        rho = 0.0625
        # as alpha grows the prediction improves monotonically
        mses = [rs_predict(RSParams(alpha=a, rho=rho)).mse for a in (1.0, 3.0, 6.0)]
        assert mses[0] > mses[1] > mses[2]
