"""Benchmark the compiled leapfrog kernel against the pure-Python fallback.

Run:  python benchmarks/bench_integrator.py [n_steps]

Integrates the same moderately eccentric Kepler orbit with both backends and
reports steps/second plus the speedup.  Also double-checks that the two
backends produce identical samples, which they should: the kernels share
their arithmetic operation for operation.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from conedyn import (
    ConeGeometry,
    Kepler,
    Params,
    PhasePoint,
    integrate,
)
from conedyn.dynamics import HAVE_COMPILED_KERNEL


def bench(backend: str, params, pt0, dt, n_steps) -> tuple[float, object]:
    t0 = time.perf_counter()
    traj = integrate(params, pt0, dt, n_steps, sample_every=n_steps // 100, backend=backend)
    return time.perf_counter() - t0, traj


def main() -> int:
    n_steps = int(sys.argv[1]) if len(sys.argv) > 1 else 2_000_000
    n_steps -= n_steps % 100

    params = Params(
        m=1.0,
        geometry=ConeGeometry.from_rational(2, 3),
        potential=Kepler(kappa=1.0),
    )
    pt0 = PhasePoint(r=0.9, phi=0.0, p_r=0.0, J=1.0)
    dt = 1e-4

    t_py, traj_py = bench("python", params, pt0, dt, n_steps)
    print(f"python   backend: {n_steps / t_py:12.0f} steps/s   ({t_py:.3f} s)")

    if not HAVE_COMPILED_KERNEL:
        print("compiled backend: not built (install with the Cython extension)")
        return 0

    t_c, traj_c = bench("compiled", params, pt0, dt, n_steps)
    print(f"compiled backend: {n_steps / t_c:12.0f} steps/s   ({t_c:.3f} s)")
    print(f"speedup: {t_py / t_c:.1f}x")

    dev = max(
        float(np.abs(traj_c.r - traj_py.r).max()),
        float(np.abs(traj_c.p_r - traj_py.p_r).max()),
        float(np.abs(traj_c.phi_unwrapped - traj_py.phi_unwrapped).max()),
    )
    print(f"max backend deviation over samples: {dev:.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
