"""Apsidal-angle quadrature, harmonic limits, width law, and the exponent scan."""

import math
from dataclasses import replace

import numpy as np
import pytest

import conedyn as cd
from conedyn.dynamics import _effective_d2
from conedyn.errors import CircularOrbitError, DomainError
from helpers import bound_energy, kepler_params, midwell_point, oscillator_params

PI = math.pi


class TestApsidalAngle:
    def test_kepler_flat(self):
        res = cd.apsidal_angle(kepler_params(), -0.375, 1.0)
        assert res.delta_phi == pytest.approx(PI, abs=1e-9)

    def test_oscillator_flat(self):
        res = cd.apsidal_angle(oscillator_params(), 1.5, 1.0)
        assert res.delta_phi == pytest.approx(PI / 2, abs=1e-9)

    def test_kepler_half_cone(self):
        res = cd.apsidal_angle(kepler_params(1, 2), -0.09, 1.0)
        assert res.delta_phi == pytest.approx(2 * PI, abs=1e-9)

    def test_circular_input_degenerate(self):
        with pytest.raises(CircularOrbitError):
            cd.apsidal_angle(kepler_params(), -0.5, 1.0)

    def test_sign_of_j_irrelevant(self):
        a = cd.apsidal_angle(kepler_params(), -0.375, 1.0).delta_phi
        b = cd.apsidal_angle(kepler_params(), -0.375, -1.0).delta_phi
        assert a == pytest.approx(b, rel=1e-12)
        assert b > 0.0

    def test_independent_of_energy_and_j(self):
        # constancy over a level grid for the two degenerate potentials
        for params, expect in ((kepler_params(2, 3), PI / (2 / 3)),
                               (oscillator_params(3, 4), PI / (2 * 3 / 4))):
            values = []
            for J in np.linspace(0.6, 1.4, 4):
                for f in np.linspace(0.1, 0.8, 4):
                    E = bound_energy(params, float(J), float(f))
                    values.append(cd.apsidal_angle(params, E, float(J)).delta_phi)
            assert max(values) - min(values) < 1e-8
            assert values[0] == pytest.approx(expect, abs=1e-8)

    def test_scale_factor_scaling_law(self):
        # dphi at scale s equals (1/s) * dphi at s=1 with J replaced by J/s
        s = 0.77
        params_s = kepler_params(s=s)
        params_1 = kepler_params()
        E, J = -0.21, 0.9
        a = cd.apsidal_angle(params_s, E, J).delta_phi
        b = cd.apsidal_angle(params_1, E, J / s).delta_phi
        assert a == pytest.approx(b / s, rel=1e-10)

    def test_near_circular_limit(self):
        # a potential whose apsidal angle genuinely varies with E; the
        # near-circular value is approached linearly in the energy offset
        params = cd.Params(
            m=1.0,
            geometry=cd.ConeGeometry(s=0.9),
            potential=cd.PowerLaw(amplitude=1.0, exponent=1.0),
        )
        limit = cd.small_oscillation_freq(params, 1.0).apsidal_limit
        _, e_c = cd.circular_orbit(params, 1.0)
        errs = []
        for eps in (1e-2, 1e-3, 1e-4):
            res = cd.apsidal_angle(params, e_c + eps, 1.0)
            errs.append(abs(res.delta_phi - limit))
        assert errs[0] < 2e-3
        assert errs[1] < 0.15 * errs[0]
        assert errs[2] < 0.15 * errs[1]

    def test_matches_trajectory_measurement(self):
        params = oscillator_params(2, 3, omega=0.9)
        E, J = bound_energy(params, 1.1, 0.35), 1.1
        quad = cd.apsidal_angle(params, E, J).delta_phi
        T = cd.radial_period(params, E, J)
        dt = T / 80000
        n = int(2.2 * 80000)
        n -= n % 40
        traj = cd.integrate(params, midwell_point(params, E, J), dt, n, 40)
        measured, t_meas = cd.measure_apsidal_advance(traj)
        assert measured == pytest.approx(quad, abs=1e-6)
        assert t_meas == pytest.approx(T, rel=1e-6)


class TestRadialPeriod:
    def test_oscillator_period_energy_independent(self):
        params = oscillator_params()
        for E, J in ((1.5, 1.0), (3.0, 0.7), (2.2, 1.3)):
            assert cd.radial_period(params, E, J) == pytest.approx(PI, abs=1e-9)

    def test_kepler_closed_form(self):
        # T = 2*pi*kappa*sqrt(m)*(-2E)^(-3/2) = 16*pi at E = -1/8
        T = cd.radial_period(kepler_params(), -0.125, 1.0)
        assert T == pytest.approx(16 * PI, rel=1e-9)

    def test_near_circular_harmonic_limit(self):
        params = kepler_params()
        r_c, e_c = cd.circular_orbit(params, 1.0)
        omega_r = math.sqrt(float(_effective_d2(params, 1.0, r_c)) / params.m)
        T = cd.radial_period(params, e_c + 1e-5, 1.0)
        assert T == pytest.approx(2 * PI / omega_r, rel=1e-4)

    def test_cross_checked_against_trajectory(self):
        params = kepler_params()
        E, J = -0.125, 1.0
        T = cd.radial_period(params, E, J)
        dt = T / 80000
        n = int(2.2 * 80000)
        n -= n % 40
        traj = cd.integrate(params, midwell_point(params, E, J), dt, n, 40)
        _, t_meas = cd.measure_apsidal_advance(traj)
        assert t_meas == pytest.approx(T, rel=1e-6)


class TestCircularOrbit:
    def test_kepler(self):
        r_c, e_c = cd.circular_orbit(kepler_params(), 1.0)
        assert (r_c, e_c) == pytest.approx((1.0, -0.5), rel=1e-12)

    def test_oscillator(self):
        r_c, e_c = cd.circular_orbit(oscillator_params(), 1.0)
        assert (r_c, e_c) == pytest.approx((1.0, 1.0), rel=1e-12)

    def test_kepler_half_cone(self):
        r_c, e_c = cd.circular_orbit(kepler_params(1, 2), 1.0)
        assert (r_c, e_c) == pytest.approx((4.0, -0.125), rel=1e-12)

    def test_zero_j_rejected(self):
        with pytest.raises(DomainError):
            cd.circular_orbit(kepler_params(), 0.0)


class TestSmallOscillation:
    def test_power_law_family(self):
        # omega^2 = alpha + 2 for any amplitude and J
        rng = np.random.default_rng(5)
        for _ in range(10):
            alpha = float(rng.uniform(-1.8, 3.0))
            if abs(alpha) < 0.05:
                continue
            amp = float(rng.uniform(0.5, 2.0)) * (1.0 if alpha > 0 else -1.0)
            params = cd.Params(
                m=1.0,
                geometry=cd.ConeGeometry(s=1.0),
                potential=cd.PowerLaw(amplitude=amp, exponent=alpha),
            )
            J = float(rng.uniform(0.5, 1.5))
            assert cd.small_oscillation_freq(params, J).omega_sq == pytest.approx(
                alpha + 2.0, rel=1e-9
            )

    def test_kepler(self):
        so = cd.small_oscillation_freq(kepler_params(1, 2), 1.0)
        assert so.omega_sq == pytest.approx(1.0, rel=1e-10)
        assert so.apsidal_limit == pytest.approx(PI / 0.5, rel=1e-10)

    def test_log_potential(self):
        params = cd.Params(
            m=1.0,
            geometry=cd.ConeGeometry(s=1.0),
            potential=cd.LogPotential(strength=1.0, r0=1.0),
        )
        so = cd.small_oscillation_freq(params, 1.0)
        assert so.omega_sq == pytest.approx(2.0, rel=1e-10)
        assert so.apsidal_limit == pytest.approx(PI / math.sqrt(2.0), rel=1e-10)


class TestWidthLaw:
    def test_kepler_exact(self):
        # U(x) is a parabola: width = 2*sqrt(2/m)*sqrt(U-U0) exactly
        res = cd.width_law_check(kepler_params(), 1.0)
        assert res.max_residual < 1e-8
        assert res.a_fit == pytest.approx(2.0 * math.sqrt(2.0), rel=1e-10)

    def test_oscillator_exact(self):
        res = cd.width_law_check(oscillator_params(), 1.0)
        assert res.max_residual < 1e-8
        assert res.a_fit == pytest.approx(math.sqrt(2.0), rel=1e-10)

    def test_log_potential_violates(self):
        params = cd.Params(
            m=1.0,
            geometry=cd.ConeGeometry(s=1.0),
            potential=cd.LogPotential(strength=1.0, r0=1.0),
        )
        assert cd.width_law_check(params, 1.0).max_residual > 1e-2

    def test_generic_power_law_violates(self):
        params = cd.Params(
            m=1.0,
            geometry=cd.ConeGeometry(s=1.0),
            potential=cd.PowerLaw(amplitude=1.0, exponent=1.0),
        )
        assert cd.width_law_check(params, 1.0).max_residual > 1e-3


class TestBertrandScan:
    def test_degenerate_exponents_pass(self):
        report = cd.bertrand_scan(
            kepler_params(), [-1.0, 2.0], [0.2, 0.4, 0.6], [0.8, 1.2]
        )
        assert report.passing() == [-1.0, 2.0]
        by_param = {v.family_param: v for v in report.verdicts}
        assert by_param[-1.0].constant == pytest.approx(PI, abs=1e-6)
        assert by_param[2.0].constant == pytest.approx(PI / 2, abs=1e-6)

    def test_linear_exponent_fails_with_near_circular_value(self):
        report = cd.bertrand_scan(kepler_params(), [1.0], [0.005, 0.3, 0.6], [1.0])
        verdict = report.verdicts[0]
        assert verdict.verdict == "fail"
        assert verdict.flatness > 1e-3
        # the lowest-energy cell sits near the circular limit pi/sqrt(3)
        low_cell = min(
            (c for c in report.cells if c.status == "ok"), key=lambda c: c.E
        )
        assert low_cell.s_delta_phi == pytest.approx(PI / math.sqrt(3.0), abs=2e-2)

    def test_infeasible_cells_flagged(self):
        report = cd.bertrand_scan(kepler_params(), [0.0], [0.3], [1.0])
        assert report.verdicts[0].verdict == "infeasible"
        assert all(c.status != "ok" for c in report.cells)

    def test_scanned_quantity_independent_of_geometry(self):
        # s*dphi depends only on (E, lam): the same lam grid gives the same
        # cells whatever cone the base parameters carry
        a = cd.bertrand_scan(kepler_params(), [-1.0], [0.3], [1.0])
        b = cd.bertrand_scan(kepler_params(1, 2), [-1.0], [0.3], [1.0])
        assert a.cells[0].s_delta_phi == pytest.approx(b.cells[0].s_delta_phi, rel=1e-10)
        assert b.verdicts[0].constant == pytest.approx(PI, abs=1e-6)


class TestVerdictClassification:
    def test_three_way_classification(self):
        from conedyn.bertrand import _classify_flatness

        assert _classify_flatness(1e-8, PI, PI) == "pass"
        assert _classify_flatness(1e-8, PI + 1e-4, PI) == "inconclusive"
        assert _classify_flatness(1e-4, PI, PI) == "inconclusive"
        assert _classify_flatness(1e-2, PI, PI) == "fail"


class TestMinimaBracketing:
    def test_multiple_minima_detected(self):
        from conedyn.dynamics import _bracket_minima

        grid = np.linspace(1.0, 9.0, 9)
        # derivative sign pattern with two descending-to-ascending crossings
        vals = np.array([-1.0, -0.5, 1.0, 2.0, -1.0, -2.0, 0.0, 3.0, 4.0])
        brackets = _bracket_minima(vals, grid)
        assert len(brackets) == 2
        assert brackets[0] == (2.0, 3.0)
        assert brackets[1] == (6.0, 8.0)  # exact zero bridged by neighbors
