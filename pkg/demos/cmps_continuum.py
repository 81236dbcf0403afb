"""Lattice discretizations of a cMPS approaching the continuum correlator.

Run with ``python demos/cmps_continuum.py``.
"""

import numpy as np

from tnet.cmps import ContinuousMps, density_correlator, lattice_density_correlator


def main():
    rng = np.random.default_rng(5)
    D, L, x = 2, 1.0, 0.5
    Q = -np.eye(D) + 0.3 * (rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D)))
    R = 0.5 * (rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D)))
    c = ContinuousMps(Q, R, L)
    exact = density_correlator(c, x).real
    print(f"continuum <n(0) n({x})> = {exact:.10f}")
    prev = None
    for eps in (0.1, 0.05, 0.025, 0.0125):
        err = abs(lattice_density_correlator(c, eps, x).real - exact)
        order = "" if prev is None else f"  order {np.log2(prev / err):.3f}"
        print(f"eps={eps:<7} error {err:.3e}{order}")
        prev = err


if __name__ == "__main__":
    main()
