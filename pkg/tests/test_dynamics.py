"""Hamiltonian, turning points, the leapfrog stepper, and closure detection."""

import math

import numpy as np
import pytest

import conedyn as cd
from conedyn.dynamics import HAVE_COMPILED_KERNEL
from conedyn.errors import (
    DomainError,
    ForbiddenEnergyError,
    StructuralError,
    TipCollisionError,
    UnboundedMotionError,
)
from helpers import bound_energy, kepler_params, midwell_point, oscillator_params, perigee_point

BACKENDS = ["python"] + (["compiled"] if HAVE_COMPILED_KERNEL else [])


class TestEnergy:
    def test_free_motion_on_half_cone(self):
        params = cd.Params(
            m=1.0,
            geometry=cd.ConeGeometry.from_rational(1, 2),
            potential=cd.PowerLaw(amplitude=0.0, exponent=1.0),
        )
        pt = cd.PhasePoint(r=2.0, phi=0.0, p_r=1.0, J=1.0)
        assert cd.energy(params, pt) == pytest.approx(1.0)

    def test_pure_potential(self):
        params = kepler_params()
        pt = cd.PhasePoint(r=1.0, phi=0.0, p_r=0.0, J=0.0)
        assert cd.energy(params, pt) == pytest.approx(-1.0)

    def test_circular_oscillator(self):
        params = oscillator_params()
        pt = cd.PhasePoint(r=1.0, phi=0.0, p_r=0.0, J=1.0)
        assert cd.energy(params, pt) == pytest.approx(1.0)


class TestEffectivePotential:
    def test_values(self):
        params = kepler_params()
        assert cd.effective_potential(params, 1.0, 1.0) == pytest.approx(-0.5)
        assert cd.effective_potential(params, 1.0, 2.0) == pytest.approx(-0.375)

    def test_zero_j_reduces_to_potential(self):
        params = oscillator_params(omega=1.3)
        r = np.linspace(0.2, 3.0, 7)
        assert np.allclose(
            cd.effective_potential(params, 0.0, r), params.potential.value(r, 1.0)
        )

    def test_domain_error(self):
        with pytest.raises(DomainError):
            cd.effective_potential(kepler_params(), 1.0, 0.0)


class TestTurningPoints:
    def test_kepler_quadratic_roots(self):
        tp = cd.turning_points(kepler_params(), -0.375, 1.0)
        assert tp.r_min == pytest.approx(2.0 / 3.0, rel=1e-12)
        assert tp.r_max == pytest.approx(2.0, rel=1e-12)

    def test_circular_levels(self):
        tp = cd.turning_points(kepler_params(), -0.5, 1.0)
        assert tp.r_min == tp.r_max == pytest.approx(1.0, rel=1e-12)
        tpo = cd.turning_points(oscillator_params(), 1.0, 1.0)
        assert tpo.r_min == tpo.r_max == pytest.approx(1.0, rel=1e-12)

    def test_forbidden_energy(self):
        with pytest.raises(ForbiddenEnergyError):
            cd.turning_points(kepler_params(), -0.7, 1.0)

    def test_unbounded_energy(self):
        with pytest.raises(UnboundedMotionError):
            cd.turning_points(kepler_params(), 0.1, 1.0)
        with pytest.raises(UnboundedMotionError):
            cd.turning_points(kepler_params(), 0.0, 1.0)

    def test_no_minimum_is_structural(self):
        params = cd.Params(
            m=1.0,
            geometry=cd.ConeGeometry(s=1.0),
            potential=cd.PowerLaw(amplitude=0.0, exponent=1.0),
        )
        with pytest.raises(StructuralError):
            cd.turning_points(params, 1.0, 1.0)

    def test_consistency_with_energy(self):
        rng = np.random.default_rng(4)
        for params in (kepler_params(2, 3), oscillator_params(3, 4, omega=0.8)):
            for _ in range(10):
                J = float(rng.uniform(0.5, 1.5))
                E = bound_energy(params, J, float(rng.uniform(0.1, 0.7)))
                tp = cd.turning_points(params, E, J)
                for r in (tp.r_min, tp.r_max):
                    u = float(cd.effective_potential(params, J, r))
                    assert abs(u - E) <= 1e-10 * abs(E)


class TestStep:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_reversibility(self, backend):
        params = kepler_params()
        pt = cd.PhasePoint(r=0.8, phi=0.3, p_r=0.4, J=1.0)
        fwd = cd.step(params, pt, 1e-3, backend=backend)
        back = cd.step(params, fwd, -1e-3, backend=backend)
        assert back.r == pytest.approx(pt.r, abs=1e-12)
        assert back.p_r == pytest.approx(pt.p_r, abs=1e-12)
        assert back.phi == pytest.approx(pt.phi, abs=1e-12)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_circular_orbit_fixed_point(self, backend):
        params = kepler_params()
        pt = cd.PhasePoint(r=1.0, phi=0.0, p_r=0.0, J=1.0)
        for _ in range(1000):
            pt = cd.step(params, pt, 1e-3, backend=backend)
        assert pt.r == pytest.approx(1.0, abs=1e-10)

    def test_free_radial_motion(self):
        params = cd.Params(
            m=1.0,
            geometry=cd.ConeGeometry(s=1.0),
            potential=cd.PowerLaw(amplitude=0.0, exponent=1.0),
        )
        traj = cd.integrate(
            params, cd.PhasePoint(r=1.0, phi=0.0, p_r=1.0, J=0.0), 1e-3, 1000, 1000
        )
        assert traj.r[-1] == pytest.approx(2.0, abs=1e-9)

    def test_tip_collision(self):
        # J = 0 radial plunge into the Kepler center
        params = kepler_params()
        pt = cd.PhasePoint(r=0.5, phi=0.0, p_r=-1.0, J=0.0)
        with pytest.raises(TipCollisionError) as err:
            cd.integrate(params, pt, 1e-2, 1000, 10)
        assert err.value.step_index >= 0

    def test_zero_dt_rejected(self):
        with pytest.raises(DomainError):
            cd.step(kepler_params(), cd.PhasePoint(r=1.0, phi=0.0, p_r=0.0, J=1.0), 0.0)


class TestIntegrate:
    def test_j_series_bitwise_constant(self):
        params = kepler_params(2, 3)
        traj = cd.integrate(params, perigee_point(params, -0.15, 1.0), 1e-3, 5000, 50)
        assert np.all(traj.series_J == traj.series_J[0])

    def test_energy_drift_reference_orbit(self):
        # e = 0.5 Kepler orbit; dt calibrated so the bounded leapfrog
        # oscillation sits below 1e-8 (drift scales as dt^2)
        params = kepler_params()
        traj = cd.integrate(params, perigee_point(params, -0.375, 1.0), 1.5e-4, 100000, 100)
        drift = np.abs(traj.series_H - traj.series_H[0]).max() / abs(traj.series_H[0])
        assert drift < 1e-8

    def test_harmonic_circular_radius_constant(self):
        params = oscillator_params()
        traj = cd.integrate(
            params, cd.PhasePoint(r=1.0, phi=0.0, p_r=0.0, J=1.0), 1e-3, 10000, 10
        )
        assert np.abs(traj.r - 1.0).max() < 1e-10

    def test_forward_backward_round_trip(self):
        params = kepler_params()
        pt0 = perigee_point(params, -0.375, 1.0, phi=0.2)
        n = 20000
        fwd = cd.integrate(params, pt0, 1e-3, n, n)
        end = fwd.point(len(fwd) - 1)
        back = cd.integrate(params, end, -1e-3, n, n)
        assert back.r[-1] == pytest.approx(pt0.r, abs=1e-10)
        assert back.p_r[-1] == pytest.approx(pt0.p_r, abs=1e-10)

    def test_symplectic_energy_error_bounded_not_secular(self):
        # random bound orbits whose radial periods resolve dt = 1e-3; the
        # |dH| envelope must stay bounded (oscillatory) with no secular ramp
        rng = np.random.default_rng(7)
        kinds = ["kepler", "osc"] * 3
        for kind in kinds:
            J = float(rng.uniform(0.6, 1.4))
            if kind == "kepler":
                params = kepler_params()
                E = bound_energy(params, J, float(rng.uniform(0.03, 0.12)))
            else:
                params = oscillator_params(omega=float(rng.uniform(0.2, 0.5)))
                E = bound_energy(params, J, float(rng.uniform(0.05, 0.25)))
            T = cd.radial_period(params, E, J)
            n = round(max(2.0, round(100.0 / T)) * T / 1e-3)
            n -= n % 100
            traj = cd.integrate(params, perigee_point(params, E, J), 1e-3, n, 100)
            dh = np.abs(traj.series_H - traj.series_H[0])
            assert dh.max() / abs(traj.series_H[0]) < 1e-7
            # fit after the first radial period: the t=0 sample is exactly 0
            mask = traj.times >= T
            slope = abs(np.polyfit(traj.times[mask], dh[mask], 1)[0])
            assert slope < 1e-12

    @pytest.mark.skipif(not HAVE_COMPILED_KERNEL, reason="compiled kernel not built")
    def test_backends_agree(self):
        params = kepler_params(2, 3)
        pt0 = perigee_point(params, -0.15, 1.0)
        a = cd.integrate(params, pt0, 1e-3, 20000, 100, backend="compiled")
        b = cd.integrate(params, pt0, 1e-3, 20000, 100, backend="python")
        assert np.abs(a.r - b.r).max() < 1e-12
        assert np.abs(a.p_r - b.p_r).max() < 1e-12
        assert np.abs(a.phi_unwrapped - b.phi_unwrapped).max() < 1e-12

    def test_trajectory_invariants(self):
        params = kepler_params()
        traj = cd.integrate(params, perigee_point(params, -0.375, 1.0), 1e-3, 2000, 20)
        n = len(traj)
        assert len(traj.points) == n == len(traj.times) == len(traj.series_H)
        # reduced angle consistent with the unwrapped accumulator
        wrapped = traj.phi_unwrapped % (2 * math.pi)
        assert np.abs(wrapped - traj.phi).max() < 1e-9
        with pytest.raises(ValueError):
            traj.r[0] = 99.0  # arrays frozen

    def test_sample_alignment_required(self):
        params = kepler_params()
        with pytest.raises(DomainError):
            cd.integrate(params, perigee_point(params, -0.375, 1.0), 1e-3, 1001, 10)

    def test_integrate_is_iterated_step(self):
        params = oscillator_params(2, 3, omega=0.7)
        pt = cd.PhasePoint(r=1.4, phi=0.5, p_r=0.2, J=1.0)
        traj = cd.integrate(params, pt, 1e-3, 50, 1)
        walked = pt
        for i in range(1, 51):
            walked = cd.step(params, walked, 1e-3)
            assert walked.r == traj.r[i]
            assert walked.p_r == traj.p_r[i]


class TestDetectClosure:
    def _trajectory(self, params, E, J, n_periods, steps_per_period=20000, sample_every=50):
        T = cd.radial_period(params, E, J)
        dt = T / steps_per_period
        n = int(n_periods * steps_per_period)
        n -= n % sample_every
        return cd.integrate(params, midwell_point(params, E, J), dt, n, sample_every)

    def test_flat_kepler_closes_after_one_period(self):
        params = kepler_params()
        traj = self._trajectory(params, -0.375, 1.0, 1.6)
        info = cd.detect_closure(traj, tol=1e-6)
        assert info is not None and info.radial_periods == 1

    def test_two_thirds_kepler_closes_after_two_periods(self):
        # per radial period the angle advances 2*pi/s = 3*pi, so the orbit
        # closes after two periods with three full turns
        params = kepler_params(2, 3)
        traj = self._trajectory(params, -0.15, 1.0, 2.6)
        info = cd.detect_closure(traj, tol=1e-6)
        assert info is not None and info.radial_periods == 2
        i_close = int(np.searchsorted(traj.times, info.closure_time))
        advance = traj.phi_unwrapped[i_close] - traj.phi_unwrapped[0]
        assert advance == pytest.approx(6 * math.pi, abs=0.05)

    def test_irrational_s_never_closes(self):
        params = kepler_params(s=1.0 / math.sqrt(2.0))
        E = bound_energy(params, 1.0, 0.3)
        traj = self._trajectory(params, E, 1.0, 12.5, steps_per_period=10000)
        assert cd.detect_closure(traj, tol=1e-6) is None

    def test_zero_j_rejected(self):
        params = cd.Params(
            m=1.0,
            geometry=cd.ConeGeometry(s=1.0),
            potential=cd.PowerLaw(amplitude=0.0, exponent=1.0),
        )
        traj = cd.integrate(params, cd.PhasePoint(r=1.0, phi=0.0, p_r=1.0, J=0.0),
                            1e-3, 1000, 10)
        with pytest.raises(DomainError):
            cd.detect_closure(traj)


class TestApsidalMeasurement:
    def test_measured_advance_matches_quadrature(self):
        params = kepler_params()
        E, J = -0.375, 1.0
        T = cd.radial_period(params, E, J)
        dt = T / 80000
        n = int(2.2 * 80000)
        n -= n % 40
        traj = cd.integrate(params, midwell_point(params, E, J), dt, n, 40)
        dphi, t_meas = cd.measure_apsidal_advance(traj)
        assert dphi == pytest.approx(math.pi, abs=1e-6)
        assert t_meas == pytest.approx(T, rel=1e-6)
        events = cd.trajectory_apsides(traj)
        kinds = [e.kind for e in events]
        assert kinds[0] == "apogee"  # launched outward from mid-well
        assert all(a != b for a, b in zip(kinds, kinds[1:]))
