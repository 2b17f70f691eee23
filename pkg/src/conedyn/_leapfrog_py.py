"""Pure-Python fallback for the compiled leapfrog kernel.

Implements the identical kick-drift-kick arithmetic as ``_leapfrog.pyx``
(same operations, same order), so results from the two backends differ only
by (absent) compiler reassociation, i.e. agree essentially bit-for-bit.
Kept loop-local and branch-light: this is the hot path when the extension
is unavailable.
"""

POT_KEPLER = 0
POT_OSCILLATOR = 1
POT_POWER = 2
POT_LOG = 3


def run_leapfrog(r, p_r, phi, J, m, s, pot_kind, c1, c2,
                 dt, n_steps, sample_every, out_r, out_pr, out_phi):
    """See ``_leapfrog.run_leapfrog``; contract and semantics are identical."""
    ms2 = m * s * s
    cent = (J * J) / ms2
    half_dt = 0.5 * dt
    k = 1

    out_r[0] = r
    out_pr[0] = p_r
    out_phi[0] = phi

    if pot_kind == POT_KEPLER:
        def vprime(x):
            return c1 / (x * x)
    elif pot_kind == POT_OSCILLATOR:
        def vprime(x):
            return c1 * x
    elif pot_kind == POT_POWER:
        def vprime(x):
            return c1 * c2 * x ** (c2 - 1.0)
    else:
        def vprime(x):
            return c1 / x

    for i in range(n_steps):
        p_r = p_r + half_dt * (cent / (r * r * r) - vprime(r))
        r_new = r + dt * (p_r / m)
        if not (r_new > 0.0):
            return (r, p_r, phi, i)
        r_mid = 0.5 * (r + r_new)
        phi = phi + dt * (J / (ms2 * (r_mid * r_mid)))
        r = r_new
        p_r = p_r + half_dt * (cent / (r * r * r) - vprime(r))
        if (i + 1) % sample_every == 0:
            out_r[k] = r
            out_pr[k] = p_r
            out_phi[k] = phi
            k += 1

    return (r, p_r, phi, -1)
