"""Seeded sampling of bound level sets and phase points.

Used by the verify-algebra command and by the test suite; everything is
driven by an explicit numpy Generator so runs are reproducible.
"""

from __future__ import annotations

import math

import numpy as np

from .bertrand import circular_orbit
from .core import Params, PhasePoint
from .dynamics import _escape_energy, effective_potential, turning_points


def draw_bound_level(
    rng: np.random.Generator,
    params: Params,
    j_range: tuple[float, float] = (0.5, 1.5),
    depth_range: tuple[float, float] = (0.1, 0.7),
) -> tuple[float, float]:
    """Random (E, J) with bounded, non-circular motion.

    J is uniform in ``j_range``; E sits at a uniform fraction of the well
    above its bottom (up to escape for potentials with one, up to twice the
    circular energy scale for confining ones).
    """
    J = float(rng.uniform(*j_range))
    _, e_c = circular_orbit(params, J)
    top = _escape_energy(params)
    f = float(rng.uniform(*depth_range))
    if math.isfinite(top):
        E = e_c + f * (top - e_c)
    else:
        E = e_c + f * 2.0 * max(abs(e_c), 1.0)
    return E, J


def draw_bound_point(
    rng: np.random.Generator,
    params: Params,
    j_range: tuple[float, float] = (0.5, 1.5),
    depth_range: tuple[float, float] = (0.1, 0.7),
) -> PhasePoint:
    """Random phase point on a random bound level set.

    r is uniform strictly inside [r_min, r_max]; the sign of p_r and the
    angle are drawn independently.
    """
    E, J = draw_bound_level(rng, params, j_range, depth_range)
    tp = turning_points(params, E, J)
    u = float(rng.uniform(0.05, 0.95))
    r = tp.r_min + u * (tp.r_max - tp.r_min)
    kinetic = E - float(effective_potential(params, J, r))
    p_r = math.copysign(
        math.sqrt(max(2.0 * params.m * kinetic, 0.0)), rng.uniform(-1.0, 1.0)
    )
    phi = float(rng.uniform(0.0, 2.0 * math.pi))
    return PhasePoint(r=r, phi=phi, p_r=p_r, J=J)
