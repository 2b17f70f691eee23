# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kick-drift-kick kernel for the reduced radial system.

Must stay arithmetically identical to ``_leapfrog_py.run_leapfrog``: same
operations in the same order, so the two backends agree to rounding noise.
"""

from libc.math cimport pow

# potential codes shared with _leapfrog_py
DEF POT_KEPLER = 0
DEF POT_OSCILLATOR = 1
DEF POT_POWER = 2
DEF POT_LOG = 3


cdef inline double _vprime(int kind, double c1, double c2, double r) noexcept nogil:
    # c1, c2 per kind: kepler (kappa, -), oscillator (m*omega^2, -),
    # power (amplitude, exponent), log (strength, -)
    if kind == POT_KEPLER:
        return c1 / (r * r)
    elif kind == POT_OSCILLATOR:
        return c1 * r
    elif kind == POT_POWER:
        return c1 * c2 * pow(r, c2 - 1.0)
    else:
        return c1 / r


def run_leapfrog(double r, double p_r, double phi, double J,
                 double m, double s, int pot_kind, double c1, double c2,
                 double dt, long n_steps, long sample_every,
                 double[::1] out_r, double[::1] out_pr, double[::1] out_phi):
    """Advance ``n_steps`` leapfrog steps, sampling every ``sample_every``.

    Sample 0 is the initial state; the output arrays must hold
    ``n_steps // sample_every + 1`` entries.  Returns
    ``(r, p_r, phi, failed_step)`` where ``failed_step`` is -1 on success or
    the index of the step whose drift left the r > 0 half-line.  phi is the
    unwrapped angle accumulated from the given initial value; J is a
    parameter of the reduced flow and is never touched.
    """
    cdef double ms2 = m * s * s
    cdef double cent = (J * J) / ms2
    cdef double half_dt = 0.5 * dt
    cdef double f, r_mid, r_new
    cdef long i, k = 1

    out_r[0] = r
    out_pr[0] = p_r
    out_phi[0] = phi

    for i in range(n_steps):
        f = cent / (r * r * r) - _vprime(pot_kind, c1, c2, r)
        p_r = p_r + half_dt * f
        r_new = r + dt * (p_r / m)
        if not (r_new > 0.0):          # catches r_new <= 0 and NaN
            return (r, p_r, phi, i)
        r_mid = 0.5 * (r + r_new)
        phi = phi + dt * (J / (ms2 * (r_mid * r_mid)))
        r = r_new
        f = cent / (r * r * r) - _vprime(pot_kind, c1, c2, r)
        p_r = p_r + half_dt * f
        if (i + 1) % sample_every == 0:
            out_r[k] = r
            out_pr[k] = p_r
            out_phi[k] = phi
            k += 1

    return (r, p_r, phi, -1)
