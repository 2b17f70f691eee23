"""Hidden-symmetry layer: conserved complex invariants and their bracket algebra.

For the Kepler and oscillator potentials on the cone the reduced dynamics
conserves, besides H and J, a complex combination

    C = (A - i B) * exp(i c s phi),      c = 1 (Kepler), c = 2 (oscillator),

with A, B real functions of (r, p_r, J).  C is single-valued on the cone
only when s is an integer.  For rational s = k/n the power Z = C^n carries
the phase exp(i c k phi) with integer winding and is a globally defined
integral of motion.  H, J, Z, Zbar close under the Poisson bracket into a
finite W-algebra (polynomial right-hand sides), verified here numerically.

Bracket convention: the canonical bracket in (r, phi; p_r, J),

    {f, g} = f_r g_pr - f_pr g_r + f_phi g_J - f_J g_phi.

Since J generates rotations and Z carries the phase exp(i c k phi), the
charge relations read {J, Z} = -i c k Z and {J, Zbar} = +i c k Zbar; the
i-absorbed convention (matching the quantum commutator normalization
[J, Z] = c k Z) drops the -i.  Reports carry both so the convention is
always explicit.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, replace
from typing import Callable

from .core import Kepler, Oscillator, Params, PhasePoint
from .dynamics import energy
from .errors import DomainError, IrrationalScaleError, StructuralError

_ZERO_FLOOR = 1e-12  # relative comparisons switch to absolute below this


# --- Invariant components ---

def kepler_invariant_components(params: Params, pt: PhasePoint) -> tuple[float, float]:
    """(A, B) = (J^2/(m s^2 r) - kappa, J p_r/(m s)) for the Kepler potential."""
    if not isinstance(params.potential, Kepler):
        raise StructuralError("kepler_invariant_components needs a Kepler potential")
    m, s = params.m, params.geometry.s
    a = pt.J * pt.J / (m * s * s * pt.r) - params.potential.kappa
    b = pt.J * pt.p_r / (m * s)
    return a, b


def oscillator_invariant_components(params: Params, pt: PhasePoint) -> tuple[float, float]:
    """(A, B) = (J^2/(m s^2 r^2) - H, p_r J/(m s r)) for the oscillator."""
    if not isinstance(params.potential, Oscillator):
        raise StructuralError("oscillator_invariant_components needs an Oscillator potential")
    m, s = params.m, params.geometry.s
    a = pt.J * pt.J / (m * s * s * pt.r * pt.r) - energy(params, pt)
    b = pt.p_r * pt.J / (m * s * pt.r)
    return a, b


def _components(params: Params, pt: PhasePoint) -> tuple[float, float, int]:
    """(A, B, phase multiplier c) for whichever supported potential is active."""
    if isinstance(params.potential, Kepler):
        a, b = kepler_invariant_components(params, pt)
        return a, b, 1
    if isinstance(params.potential, Oscillator):
        a, b = oscillator_invariant_components(params, pt)
        return a, b, 2
    raise StructuralError(
        f"no conserved complex invariant for {type(params.potential).__name__}"
    )


@dataclass(frozen=True)
class InvariantValue:
    """Value of the complex invariant at one phase point.

    ``power`` is the power of C that was taken (1 for the local invariant);
    ``k`` is the integer phase winding when the geometry is rational, else
    None.  ``multivalued`` marks values that change under phi -> phi + 2*pi.
    """

    re: float
    im: float
    kind: str
    power: int
    k: int | None
    multivalued: bool

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


def local_invariant_raw(params: Params, r: float, phi: float, p_r: float, J: float) -> complex:
    """Local invariant at raw coordinates; phi is used as given, without
    reduction mod 2*pi.  This is the evaluation that exposes the
    multivaluedness: for non-integer s the value changes under
    phi -> phi + 2*pi."""
    pt = PhasePoint(r=r, phi=0.0, p_r=p_r, J=J)
    a, b, c = _components(params, pt)
    return complex(a, -b) * cmath.exp(1j * c * params.geometry.s * phi)


def local_invariant(params: Params, pt: PhasePoint) -> InvariantValue:
    """Locally defined invariant C = (A - iB) exp(i c s phi).

    Conserved by the flow, but single-valued on the cone only for integer s;
    the ``multivalued`` flag records that.  The stored (reduced) phi is used.
    """
    a, b, c = _components(params, pt)
    s = params.geometry.s
    val = complex(a, -b) * cmath.exp(1j * c * s * pt.phi)
    rational = params.geometry.rational
    integer_s = rational is not None and rational[1] == 1
    return InvariantValue(
        re=val.real,
        im=val.imag,
        kind="kepler" if c == 1 else "oscillator",
        power=1,
        k=rational[0] if rational is not None else None,
        multivalued=not integer_s,
    )


def global_invariant(params: Params, pt: PhasePoint) -> InvariantValue:
    """Globally defined invariant Z = C^n = (A - iB)^n exp(i c k phi), s = k/n.

    Single-valued under phi -> phi + 2*pi by construction.  Requires the
    geometry to carry its exact rational form; for irrational s only the
    local invariant exists.
    """
    rational = params.geometry.rational
    if rational is None:
        raise IrrationalScaleError(
            "geometry has no rational form: only the local invariant is defined"
        )
    k, n = rational
    a, b, c = _components(params, pt)
    val = complex(a, -b) ** n * cmath.exp(1j * c * k * pt.phi)
    return InvariantValue(
        re=val.real,
        im=val.imag,
        kind="kepler" if c == 1 else "oscillator",
        power=n,
        k=k,
        multivalued=False,
    )


def norm_identity_residual(params: Params, pt: PhasePoint) -> float:
    """Relative residual of the invariant-norm identity at one point.

    A^2 + B^2 equals 2 H J^2/(m s^2) + kappa^2 (Kepler) or
    H^2 - omega^2 J^2 / s^2 (oscillator); both follow from the definitions by
    direct algebra, so the residual should sit at machine precision.
    """
    a, b, c = _components(params, pt)
    lhs = a * a + b * b
    m, s = params.m, params.geometry.s
    h = energy(params, pt)
    if c == 1:
        kappa = params.potential.kappa
        rhs = 2.0 * h * pt.J * pt.J / (m * s * s) + kappa * kappa
    else:
        omega = params.potential.omega
        rhs = h * h - omega * omega * pt.J * pt.J / (s * s)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0)


# --- Finite-difference Poisson brackets ---

_COORDS = ("r", "phi", "p_r", "J")


def _partials(f: Callable[[PhasePoint], complex], pt: PhasePoint, h: float) -> list[complex]:
    """Central differences of f in each canonical coordinate.

    The step per coordinate is h * max(1, |coordinate|).  Differencing must
    stay inside r > 0.
    """
    out = []
    for name in _COORDS:
        x = getattr(pt, name)
        delta = h * max(1.0, abs(x))
        if name == "r" and x - delta <= 0.0:
            raise DomainError("finite difference would cross r = 0; reduce h")
        hi = replace(pt, **{name: x + delta})
        lo = replace(pt, **{name: x - delta})
        out.append((f(hi) - f(lo)) / (2.0 * delta))
    return out


def _bracket_once(f, g, pt: PhasePoint, h: float) -> complex:
    fr, fphi, fp, fj = _partials(f, pt, h)
    gr, gphi, gp, gj = _partials(g, pt, h)
    return fr * gp - fp * gr + fphi * gj - fj * gphi


def poisson_bracket(
    f: Callable[[PhasePoint], complex],
    g: Callable[[PhasePoint], complex],
    pt: PhasePoint,
    h: float = 1e-5,
) -> complex:
    """Canonical bracket {f, g} at pt by central differences.

    One Richardson halving is applied: the returned value is the
    extrapolation of the h and h/2 estimates, accurate to O(h^4) for smooth
    arguments.  Complex-valued functions are differenced componentwise.
    """
    value, _ = _bracket_extrapolated(f, g, pt, h)
    return value


def _bracket_extrapolated(f, g, pt: PhasePoint, h: float) -> tuple[complex, float]:
    """(extrapolated bracket, relative agreement between raw and extrapolated)."""
    b1 = _bracket_once(f, g, pt, h)
    b2 = _bracket_once(f, g, pt, 0.5 * h)
    value = (4.0 * b2 - b1) / 3.0
    agreement = abs(value - b2) / max(abs(value), _ZERO_FLOOR)
    return value, agreement


# --- W-algebra verification ---

@dataclass(frozen=True)
class BracketRow:
    """One numerically evaluated bracket against one candidate right side."""

    name: str
    value: complex
    expected: complex
    abs_err: float
    rel_err: float
    role: str  # "check": must hold; "finding": recorded for adjudication
    note: str = ""


@dataclass(frozen=True)
class BracketReport:
    """All verified brackets at one phase point.

    ``zzbar_match`` records which {Z, Zbar} candidate right side the numeric
    bracket supports: "energy_in_base", "energy_free_base", "both" (they
    coincide, e.g. n = 1 or any oscillator case), or "neither".
    """

    rows: list[BracketRow]
    h: float
    point: PhasePoint
    kind: str
    k: int
    n: int
    zzbar_match: str

    def worst_check_error(self) -> float:
        return max(row.rel_err for row in self.rows if row.role == "check")


def _rel_err(value: complex, expected: complex, scale: float) -> float:
    return abs(value - expected) / max(abs(expected), scale, _ZERO_FLOOR)


def verify_w_algebra(params: Params, pt: PhasePoint, h: float = 1e-5) -> BracketReport:
    """Evaluate the W-algebra brackets at pt and compare with the closed forms.

    Checked relations (canonical bracket, charge c = 1 Kepler / 2 oscillator):

        {J, Z} = -i c k Z        {J, Zbar} = +i c k Zbar
        {H, Z} = 0               {H, J} = 0

    The i-absorbed versions (+/- c k without the i) are reported alongside as
    findings, as are both candidate closed forms for {Z, Zbar}:

        Kepler:      (4 i n^3/(m k)) J H * base^(n-1)
                     with base either A^2+B^2 = 2 n^2 J^2 H/(m k^2) + kappa^2
                     (energy in the base) or 2 n^2 J^2/(m k^2) + kappa^2
                     (energy-free base); they differ for n > 1.
        Oscillator:  -(4 i n^3/k) omega^2 J * (H^2 - omega^2 n^2 J^2/k^2)^(n-1),
                     whose base already equals A^2+B^2.

    The finite-difference value is the ground truth; ``zzbar_match`` states
    which candidate it supports at 1e-5 relative.
    """
    rational = params.geometry.rational
    if rational is None:
        raise IrrationalScaleError(
            "W-algebra verification needs an exact rational scale factor"
        )
    k, n = rational
    a, b, c = _components(params, pt)
    kind = "kepler" if c == 1 else "oscillator"
    z = global_invariant(params, pt).value
    hval = energy(params, pt)
    m = params.m
    charge = c * k

    def f_j(q: PhasePoint) -> complex:
        return complex(q.J)

    def f_h(q: PhasePoint) -> complex:
        return complex(energy(params, q))

    def f_z(q: PhasePoint) -> complex:
        return global_invariant(params, q).value

    def f_zbar(q: PhasePoint) -> complex:
        return global_invariant(params, q).value.conjugate()

    scale_z = abs(z)
    rows: list[BracketRow] = []

    jz, _ = _bracket_extrapolated(f_j, f_z, pt, h)
    expected = -1j * charge * z
    rows.append(BracketRow(
        name="{J,Z}", value=jz, expected=expected,
        abs_err=abs(jz - expected), rel_err=_rel_err(jz, expected, 0.0),
        role="check", note="canonical bracket: -i * charge * Z",
    ))
    alt = charge * z
    rows.append(BracketRow(
        name="{J,Z} i-absorbed", value=jz, expected=alt,
        abs_err=abs(jz - alt), rel_err=_rel_err(jz, alt, 0.0),
        role="finding", note="i-absorbed (commutator-normalized) convention",
    ))

    jzb, _ = _bracket_extrapolated(f_j, f_zbar, pt, h)
    expected = 1j * charge * z.conjugate()
    rows.append(BracketRow(
        name="{J,Zbar}", value=jzb, expected=expected,
        abs_err=abs(jzb - expected), rel_err=_rel_err(jzb, expected, 0.0),
        role="check", note="canonical bracket: +i * charge * Zbar",
    ))
    alt = -charge * z.conjugate()
    rows.append(BracketRow(
        name="{J,Zbar} i-absorbed", value=jzb, expected=alt,
        abs_err=abs(jzb - alt), rel_err=_rel_err(jzb, alt, 0.0),
        role="finding", note="i-absorbed (commutator-normalized) convention",
    ))

    hz, _ = _bracket_extrapolated(f_h, f_z, pt, h)
    rows.append(BracketRow(
        name="{H,Z}", value=hz, expected=0.0,
        abs_err=abs(hz), rel_err=abs(hz) / max(scale_z, _ZERO_FLOOR),
        role="check", note="Z is a constant of motion; error scaled by |Z|",
    ))

    hj, _ = _bracket_extrapolated(f_h, f_j, pt, h)
    rows.append(BracketRow(
        name="{H,J}", value=hj, expected=0.0,
        abs_err=abs(hj), rel_err=abs(hj) / max(abs(pt.J), _ZERO_FLOOR),
        role="check", note="central force conserves J; error scaled by |J|",
    ))

    zzb, _ = _bracket_extrapolated(f_z, f_zbar, pt, h)
    norm_sq = a * a + b * b
    if kind == "kepler":
        kappa = params.potential.kappa
        pref = 4j * n**3 / (m * k) * pt.J * hval
        cand_energy = pref * norm_sq ** (n - 1)
        cand_free = pref * (2.0 * n * n * pt.J * pt.J / (m * k * k) + kappa * kappa) ** (n - 1)
    else:
        omega = params.potential.omega
        pref = -4j * n**3 / k * omega * omega * pt.J
        cand_energy = pref * norm_sq ** (n - 1)
        cand_free = pref * (hval * hval - omega * omega * n * n * pt.J * pt.J / (k * k)) ** (n - 1)
    scale_zz = max(abs(cand_energy), abs(cand_free))
    err_energy = _rel_err(zzb, cand_energy, 0.01 * scale_zz)
    err_free = _rel_err(zzb, cand_free, 0.01 * scale_zz)
    rows.append(BracketRow(
        name="{Z,Zbar} energy-in-base", value=zzb, expected=cand_energy,
        abs_err=abs(zzb - cand_energy), rel_err=err_energy,
        role="finding", note="power base A^2+B^2 (contains H)",
    ))
    rows.append(BracketRow(
        name="{Z,Zbar} energy-free-base", value=zzb, expected=cand_free,
        abs_err=abs(zzb - cand_free), rel_err=err_free,
        role="finding", note="power base without H",
    ))
    match_energy = err_energy < 1e-5
    match_free = err_free < 1e-5
    if match_energy and match_free:
        zzbar_match = "both"
    elif match_energy:
        zzbar_match = "energy_in_base"
    elif match_free:
        zzbar_match = "energy_free_base"
    else:
        zzbar_match = "neither"

    return BracketReport(
        rows=rows, h=h, point=pt, kind=kind, k=k, n=n, zzbar_match=zzbar_match
    )
