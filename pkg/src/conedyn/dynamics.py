"""Hamiltonian evaluation, turning points, symplectic integration, closure.

The time integration works in the reduced polar coordinates (r, p_r): J is a
parameter of the reduced flow and conserved exactly by construction, and phi
is reconstructed by quadrature alongside.  The kick-drift-kick stepper is
second order and symplectic in (r, p_r); a compiled kernel is used when the
extension built, with a pure-Python twin selected at import time otherwise.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .core import (
    TWO_PI,
    Kepler,
    LogPotential,
    Oscillator,
    Params,
    PhasePoint,
    PowerLaw,
)
from .errors import (
    DomainError,
    ForbiddenEnergyError,
    StructuralError,
    TipCollisionError,
    UnboundedMotionError,
)

from . import _leapfrog_py

try:
    from . import _leapfrog  # type: ignore[attr-defined]

    HAVE_COMPILED_KERNEL = True
except ImportError:  # pragma: no cover - depends on the build
    _leapfrog = None
    HAVE_COMPILED_KERNEL = False

_FORCE_PYTHON = bool(os.environ.get("CONEDYN_PURE_PYTHON"))


def kernel_backend() -> str:
    """Name of the stepper backend selected at import: 'compiled' or 'python'."""
    if HAVE_COMPILED_KERNEL and not _FORCE_PYTHON:
        return "compiled"
    return "python"


def _kernel_module(backend: str | None):
    if backend is None:
        backend = kernel_backend()
    if backend == "compiled":
        if not HAVE_COMPILED_KERNEL:
            raise StructuralError("compiled kernel requested but not built")
        return _leapfrog
    if backend == "python":
        return _leapfrog_py
    raise DomainError(f"unknown backend {backend!r}; use 'compiled' or 'python'")


def _potential_code(params: Params) -> tuple[int, float, float]:
    """Encode the potential for the kernels: (kind, c1, c2)."""
    pot = params.potential
    if isinstance(pot, Kepler):
        return _leapfrog_py.POT_KEPLER, pot.kappa, 0.0
    if isinstance(pot, Oscillator):
        return _leapfrog_py.POT_OSCILLATOR, pot.beta(params.m), 0.0
    if isinstance(pot, PowerLaw):
        return _leapfrog_py.POT_POWER, pot.amplitude, pot.exponent
    if isinstance(pot, LogPotential):
        return _leapfrog_py.POT_LOG, pot.strength, 0.0
    raise StructuralError(f"unsupported potential {type(pot).__name__}")


# --- Energies ---

def energy(params: Params, pt: PhasePoint) -> float:
    """Hamiltonian H = p_r^2/(2m) + J^2/(2 m s^2 r^2) + V(r)."""
    m, s = params.m, params.geometry.s
    return (
        pt.p_r * pt.p_r / (2.0 * m)
        + pt.J * pt.J / (2.0 * m * s * s * pt.r * pt.r)
        + float(params.potential.value(pt.r, m))
    )


def effective_potential(params: Params, J: float, r):
    """Reduced radial potential U_eff(r) = J^2/(2 m s^2 r^2) + V(r).

    Accepts scalar or array r; raises on any non-positive radius.
    """
    if np.any(np.asarray(r) <= 0.0):
        raise DomainError("effective potential evaluated at non-positive radius")
    m, s = params.m, params.geometry.s
    return J * J / (2.0 * m * s * s * r * r) + params.potential.value(r, m)


def _effective_d1(params: Params, J: float, r):
    m, s = params.m, params.geometry.s
    return -J * J / (m * s * s * r * r * r) + params.potential.d1(r, m)


def _effective_d2(params: Params, J: float, r):
    m, s = params.m, params.geometry.s
    return 3.0 * J * J / (m * s * s * r * r * r * r) + params.potential.d2(r, m)


def _radial_force(params: Params, J: float, r):
    """-dU_eff/dr, the force driving the reduced radial motion."""
    return -_effective_d1(params, J, r)


def _escape_energy(params: Params) -> float:
    """lim U_eff(r) as r -> infinity; energies at or above it are unbounded."""
    pot = params.potential
    if isinstance(pot, Kepler):
        return 0.0
    if isinstance(pot, (Oscillator, LogPotential)):
        return math.inf
    if isinstance(pot, PowerLaw):
        if pot.exponent < 0.0 or pot.amplitude == 0.0:
            return 0.0
        if pot.exponent == 0.0:
            return pot.amplitude
        return math.inf if pot.amplitude > 0.0 else -math.inf
    raise StructuralError(f"unsupported potential {type(pot).__name__}")


# --- Turning points ---

_SCAN_GRID = np.geomspace(1e-6, 1e6, 289)


def _bracket_minima(d1_values: np.ndarray, grid: np.ndarray) -> list[tuple[float, float]]:
    """Brackets (a, b) where the derivative crosses - to + on the grid.

    A grid node landing exactly on the critical point (derivative == 0) is
    bracketed by its neighbors.
    """
    vals = np.asarray(d1_values, dtype=float)
    out: list[tuple[float, float]] = []
    for i in range(len(vals) - 1):
        if vals[i] < 0.0 < vals[i + 1]:
            out.append((float(grid[i]), float(grid[i + 1])))
        elif vals[i + 1] == 0.0 and vals[i] < 0.0 and i + 2 < len(vals) and vals[i + 2] > 0.0:
            out.append((float(grid[i]), float(grid[i + 2])))
    return out


def _find_ueff_minimum(params: Params, J: float) -> tuple[float, float]:
    """Location and value of the (unique) interior minimum of U_eff."""
    d1 = _effective_d1(params, J, _SCAN_GRID)
    brackets = _bracket_minima(np.asarray(d1), _SCAN_GRID)
    if not brackets:
        raise StructuralError(
            "effective potential has no interior minimum for these parameters"
        )
    a, b = brackets[0]
    r_c = brentq(lambda r: _effective_d1(params, J, r), a, b, rtol=1e-14, xtol=1e-30)
    return float(r_c), float(effective_potential(params, J, r_c))


@dataclass(frozen=True)
class TurningPoints:
    """Inner and outer radii where U_eff(r) = E for a bound level set."""

    r_min: float
    r_max: float


def turning_points(params: Params, E: float, J: float) -> TurningPoints:
    """Solve U_eff(r) = E for the two radii bracketing the bound motion.

    Roots are bracketed starting from the U_eff minimum and polished with a
    derivative-free solver to 1e-12 relative.  E at the minimum returns the
    degenerate pair (r_c, r_c); energies below it are forbidden, energies at
    or above the escape value are unbounded.
    """
    r_c, u0 = _find_ueff_minimum(params, J)
    tol_circ = 1e-13 * max(1.0, abs(u0), abs(E))
    if E < u0 - tol_circ:
        raise ForbiddenEnergyError(
            f"E={E} lies below the effective-potential minimum {u0}"
        )
    if E - u0 <= tol_circ:
        return TurningPoints(r_min=r_c, r_max=r_c)
    if E >= _escape_energy(params):
        raise UnboundedMotionError(
            f"E={E} at or above the escape energy {_escape_energy(params)}"
        )

    def f(r: float) -> float:
        return float(effective_potential(params, J, r)) - E

    hi = r_c
    for _ in range(2048):
        hi *= 2.0
        if f(hi) > 0.0:
            break
    else:  # pragma: no cover - escape check above prevents this
        raise UnboundedMotionError("no outer turning point found")
    r_max = brentq(f, r_c, hi, rtol=1e-13, xtol=1e-30)

    lo = r_c
    for _ in range(2048):
        lo *= 0.5
        if f(lo) > 0.0:
            break
    else:
        raise DomainError(
            "no inner turning point: motion reaches the tip (requires J != 0)"
        )
    r_min = brentq(f, lo, r_c, rtol=1e-13, xtol=1e-30)
    return TurningPoints(r_min=float(r_min), r_max=float(r_max))


# --- Time integration ---

@dataclass(eq=False)
class Trajectory:
    """Sampled solution of the reduced flow plus conserved-quantity series.

    Arrays are aligned sample-by-sample and frozen after construction.
    ``phi_unwrapped`` accumulates the full angle; the reduced angle of each
    sample point equals it mod 2*pi by construction.
    """

    params: Params
    dt: float
    sample_every: int
    times: np.ndarray
    r: np.ndarray
    phi: np.ndarray
    p_r: np.ndarray
    phi_unwrapped: np.ndarray
    series_H: np.ndarray
    series_J: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        for name in ("r", "phi", "p_r", "phi_unwrapped", "series_H", "series_J"):
            arr = getattr(self, name)
            if len(arr) != n:
                raise DomainError(f"trajectory array {name!r} misaligned")
            arr.flags.writeable = False
        self.times.flags.writeable = False

    def __len__(self) -> int:
        return len(self.times)

    def point(self, i: int) -> PhasePoint:
        return PhasePoint(
            r=float(self.r[i]),
            phi=float(self.phi[i]),
            p_r=float(self.p_r[i]),
            J=float(self.series_J[i]),
        )

    @cached_property
    def points(self) -> tuple[PhasePoint, ...]:
        return tuple(self.point(i) for i in range(len(self)))


def _run_kernel(params, pt, dt, n_steps, sample_every, backend):
    kind, c1, c2 = _potential_code(params)
    n_samples = n_steps // sample_every + 1
    out_r = np.empty(n_samples)
    out_pr = np.empty(n_samples)
    out_phi = np.empty(n_samples)
    mod = _kernel_module(backend)
    _, _, _, failed = mod.run_leapfrog(
        pt.r, pt.p_r, pt.phi, pt.J,
        params.m, params.geometry.s, kind, c1, c2,
        dt, n_steps, sample_every, out_r, out_pr, out_phi,
    )
    if failed >= 0:
        raise TipCollisionError(step_index=int(failed))
    return out_r, out_pr, out_phi


def step(params: Params, pt: PhasePoint, dt: float, backend: str | None = None) -> PhasePoint:
    """One kick-drift-kick step of the reduced system.

    Half-kick p_r, drift r (advancing phi with the drift-midpoint radius),
    half-kick p_r.  J is untouched.  Negative dt is allowed; the scheme is
    exactly time-reversible up to rounding.
    """
    if dt == 0.0 or not math.isfinite(dt):
        raise DomainError(f"dt must be nonzero and finite, got {dt}")
    out_r, out_pr, out_phi = _run_kernel(params, pt, dt, 1, 1, backend)
    return PhasePoint(r=float(out_r[1]), phi=float(out_phi[1]),
                      p_r=float(out_pr[1]), J=pt.J)


def integrate(
    params: Params,
    pt0: PhasePoint,
    dt: float,
    n_steps: int,
    sample_every: int = 1,
    backend: str | None = None,
) -> Trajectory:
    """Iterate :func:`step` and record samples.

    ``n_steps`` must be a multiple of ``sample_every`` so the final state is
    always sampled.  A tip collision propagates with its failing step index.
    """
    if dt == 0.0 or not math.isfinite(dt):
        raise DomainError(f"dt must be nonzero and finite, got {dt}")
    if n_steps < 1 or sample_every < 1:
        raise DomainError("n_steps and sample_every must be >= 1")
    if n_steps % sample_every != 0:
        raise DomainError("n_steps must be a multiple of sample_every")

    out_r, out_pr, out_phi = _run_kernel(params, pt0, dt, n_steps, sample_every, backend)
    n_samples = len(out_r)
    times = dt * sample_every * np.arange(n_samples)
    m, s = params.m, params.geometry.s
    series_h = (
        out_pr * out_pr / (2.0 * m)
        + pt0.J * pt0.J / (2.0 * m * s * s * out_r * out_r)
        + params.potential.value(out_r, m)
    )
    return Trajectory(
        params=params,
        dt=dt,
        sample_every=sample_every,
        times=times,
        r=out_r,
        phi=out_phi % TWO_PI,
        p_r=out_pr,
        phi_unwrapped=out_phi,
        series_H=np.asarray(series_h, dtype=float),
        series_J=np.full(n_samples, pt0.J),
    )


# --- Trajectory analysis: interpolation, apsides, closure ---

class _Hermite:
    """Piecewise-cubic interpolant through samples with known derivatives.

    Derivative data comes straight from the equations of motion, so the
    interpolation error is O(h^4) in the sample spacing.
    """

    def __init__(self, t: np.ndarray, y: np.ndarray, dy: np.ndarray):
        self.t = t
        self.y = y
        self.dy = dy

    def __call__(self, x: float) -> float:
        i = int(np.searchsorted(self.t, x, side="right")) - 1
        i = min(max(i, 0), len(self.t) - 2)
        t0, t1 = self.t[i], self.t[i + 1]
        h = t1 - t0
        u = (x - t0) / h
        u2, u3 = u * u, u * u * u
        return (
            (2.0 * u3 - 3.0 * u2 + 1.0) * self.y[i]
            + (u3 - 2.0 * u2 + u) * h * self.dy[i]
            + (-2.0 * u3 + 3.0 * u2) * self.y[i + 1]
            + (u3 - u2) * h * self.dy[i + 1]
        )


def _interpolants(traj: Trajectory):
    """Hermite interpolants for r, p_r and the unwrapped angle."""
    params = traj.params
    J = float(traj.series_J[0])
    m, s = params.m, params.geometry.s
    dr = traj.p_r / m
    dp = _radial_force(params, J, traj.r)
    dphi = J / (m * s * s * traj.r * traj.r)
    return (
        _Hermite(traj.times, traj.r, dr),
        _Hermite(traj.times, traj.p_r, np.asarray(dp, dtype=float)),
        _Hermite(traj.times, traj.phi_unwrapped, dphi),
    )


@dataclass(frozen=True)
class ApsisEvent:
    """A refined p_r zero crossing: perigee (r minimum) or apogee (r maximum)."""

    time: float
    kind: str
    r: float
    phi_unwrapped: float


def trajectory_apsides(traj: Trajectory) -> list[ApsisEvent]:
    """Locate apsis passages by root-finding p_r on the Hermite interpolant."""
    r_h, p_h, phi_h = _interpolants(traj)
    p = traj.p_r
    t = traj.times
    events: list[ApsisEvent] = []
    for i in range(len(p) - 1):
        if p[i] == 0.0 or p[i] * p[i + 1] >= 0.0:
            continue
        t_star = brentq(p_h, t[i], t[i + 1], rtol=1e-15, xtol=1e-30)
        kind = "perigee" if p[i] < 0.0 else "apogee"
        events.append(
            ApsisEvent(time=float(t_star), kind=kind,
                       r=float(r_h(t_star)), phi_unwrapped=float(phi_h(t_star)))
        )
    return events


def measure_apsidal_advance(traj: Trajectory) -> tuple[float, float]:
    """(apsidal angle, radial period) measured directly from the trajectory.

    The apsidal angle is the unwrapped-phi advance between the first two
    adjacent apsis events; the radial period is the spacing of like events.
    Needs at least three apsis passages in the trajectory.
    """
    events = trajectory_apsides(traj)
    if len(events) < 3:
        raise DomainError("trajectory too short: fewer than three apsis passages")
    delta_phi = abs(events[1].phi_unwrapped - events[0].phi_unwrapped)
    period = events[2].time - events[0].time
    return delta_phi, period


@dataclass(frozen=True)
class ClosureInfo:
    """First detected return to the initial phase-space point."""

    closure_time: float
    radial_periods: int


def detect_closure(traj: Trajectory, tol: float = 1e-6) -> ClosureInfo | None:
    """Find the first return of (r, p_r) to its initial value with the
    unwrapped angle advanced by an integer multiple of 2*pi.

    Both conditions are tested within ``tol`` in amplitude-normalized
    distance (the angle is normalized by 2*pi), with Hermite interpolation
    between samples.  Radial periods are counted as successive (r, p_r)
    returns, which the reduced dynamics produces exactly once per period.
    Returns None when no closure occurs within the trajectory.
    """
    if float(traj.series_J[0]) == 0.0:
        raise DomainError("closure detection requires J != 0")
    r, p, t = traj.r, traj.p_r, traj.times
    amp_r = float(r.max() - r.min())
    amp_p = max(float(p.max() - p.min()), 1e-300)
    if amp_r <= 1e-9 * max(float(r.mean()), 1e-300):
        raise DomainError("no measurable radial oscillation in this trajectory")

    r0, p0, phi0 = float(r[0]), float(p[0]), float(traj.phi_unwrapped[0])
    d = np.maximum(np.abs(r - r0) / amp_r, np.abs(p - p0) / amp_p)

    departed = np.nonzero(d > 0.35)[0]
    if len(departed) == 0:
        return None
    start = int(departed[0])

    r_h, p_h, phi_h = _interpolants(traj)

    def dist_sq(x: float) -> float:
        dr = (r_h(x) - r0) / amp_r
        dp = (p_h(x) - p0) / amp_p
        return dr * dr + dp * dp

    periods = 0
    for i in range(start + 1, len(d) - 1):
        if not (d[i] <= 0.2 and d[i] <= d[i - 1] and d[i] < d[i + 1]):
            continue
        periods += 1
        window = (float(t[i - 1]), float(t[i + 1]))
        res = minimize_scalar(dist_sq, bounds=window, method="bounded",
                              options={"xatol": (window[1] - window[0]) * 1e-10})
        t_star = float(res.x)
        d_rp = max(abs(r_h(t_star) - r0) / amp_r, abs(p_h(t_star) - p0) / amp_p)
        winding = (phi_h(t_star) - phi0) / TWO_PI
        d_phi = abs(winding - round(winding))
        if d_rp <= tol and d_phi <= tol:
            return ClosureInfo(closure_time=t_star, radial_periods=periods)
    return None
