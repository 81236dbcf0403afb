"""DMRG energies against exact diagonalization as the bond dimension grows.

Run with ``python demos/dmrg_vs_exact.py``.
"""

from tnet import ed
from tnet.dmrg import DmrgConfig, ground_state
from tnet.mpo import ModelSpec, build_mpo


def main():
    for spec in (ModelSpec("xy", 10, gamma=0.5, lam=0.75), ModelSpec("majumdar_ghosh", 10),
                 ModelSpec("heisenberg_spin1", 8)):
        e0 = ed.solve(spec)[0].ground_energy
        print(f"{spec.kind} n={spec.n}: exact E0 = {e0:.12f}")
        for D in (2, 4, 8, 16, 32, 64):
            _, rep = ground_state(build_mpo(spec), DmrgConfig(schedule=(D,), max_sweeps=10))
            print(f"  D={D:3d}  E - E0 = {rep.energy - e0:9.2e}  variance = {rep.variance:9.2e}")


if __name__ == "__main__":
    main()
