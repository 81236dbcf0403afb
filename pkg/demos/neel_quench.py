"""Real-time TEBD after a Neel quench, compared with the exact propagator.

Run with ``python demos/neel_quench.py``.
"""

import numpy as np
import scipy.linalg

from tnet import ed
from tnet.expectation import local_expectation
from tnet.mpo import PAULI, ModelSpec
from tnet.mps import basis_state, to_dense
from tnet.tebd import build_plan, evolve


def main():
    n, Z = 8, PAULI["Z"]
    spec = ModelSpec("xy", n, gamma=0.0, lam=0.0)
    start = basis_state("01" * (n // 2))
    psi = scipy.linalg.expm(-1j * ed.dense_hamiltonian(spec)) @ to_dense(start)
    exact = np.vdot(psi, ed.local_operator({3: Z}, n, 2) @ psi).real
    print(f"exact <Z> on site 3 at t=1: {exact:.12f}")
    prev = None
    for dt in (0.1, 0.05, 0.025, 0.0125):
        state, trace = evolve(start, build_plan(spec, dt, steps=round(1 / dt)))
        err = abs(local_expectation(state, Z, 3).real - exact)
        order = "" if prev is None else f"  order {np.log2(prev / err):.3f}"
        print(f"dt={dt:<7} error {err:.3e}  S_mid {trace.s_mid[-1]:.4f}{order}")
        prev = err


if __name__ == "__main__":
    main()
