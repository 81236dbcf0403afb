import json

import numpy as np
import pytest

from tnet import ed
from tnet.dmrg import (DmrgConfig, DmrgReport, Environments, energy_and_variance, energy_variance,
                       ground_state, sweep_once)
from tnet.errors import BoundaryError, StaleEnvironmentError, SymmetryError
from tnet.expectation import EnvironmentCache
from tnet.mpo import PAULI, MatrixProductOperator, ModelSpec, build_mpo, expectation_mpo
from tnet.mps import basis_state, canonicalize, random_mps, to_dense

from oracles import MG_N12_E0, XY_N10_G0_L05_E0


def test_config_validation():
    with pytest.raises(ValueError):
        DmrgConfig(schedule=(8, 4))
    with pytest.raises(ValueError):
        DmrgConfig(mode="three-site")
    with pytest.raises(ValueError):
        DmrgConfig(energy_tol=0)
    cfg = DmrgConfig.from_dict({"schedule": [4, 8], "tols": {"energy": 1e-7}, "seed": 3})
    assert cfg.schedule == (4, 8) and cfg.energy_tol == 1e-7
    assert cfg.bond_dim(0) == 4 and cfg.bond_dim(9) == 8
    assert DmrgConfig.from_dict(cfg.to_dict()) == cfg


def test_aklt_bulk_energy_d2():
    """Open AKLT chain with bulk terms only: D=2 reaches zero energy per term."""
    n = 20
    op = build_mpo(ModelSpec("aklt", n))
    state, report = ground_state(op, DmrgConfig(schedule=(2,), max_sweeps=10, energy_tol=1e-12))
    assert abs(report.energy) / (n - 1) < 1e-8
    assert state.max_bond <= 2


def test_majumdar_ghosh_d3():
    op = build_mpo(ModelSpec("majumdar_ghosh", 12))
    state, report = ground_state(op, DmrgConfig(schedule=(3,), max_sweeps=10))
    assert abs(report.energy - MG_N12_E0) < 1e-8
    assert state.max_bond <= 3


def test_xy_d16_matches_ed():
    spec = ModelSpec("xy", 10, gamma=0.0, lam=0.5)
    _, report = ground_state(build_mpo(spec), DmrgConfig(schedule=(16,), max_sweeps=10))
    assert abs(report.energy - XY_N10_G0_L05_E0) < 1e-8
    assert report.variance < 1e-6
    assert report.converged


def test_energy_is_variational_and_monotone():
    """Energies bound E0 from above and approach it as D grows through 2, 4, 8, 16."""
    for spec in (ModelSpec("xy", 10, gamma=0.5, lam=0.75), ModelSpec("heisenberg_spin1", 6)):
        e0 = ed.solve(spec)[0].ground_energy
        errs = []
        for D in (2, 4, 8, 16):
            _, rep = ground_state(build_mpo(spec), DmrgConfig(schedule=(D,), max_sweeps=8))
            assert rep.energy >= e0 - 1e-10
            errs.append(rep.energy - e0)
        assert all(b <= a + 1e-10 for a, b in zip(errs, errs[1:]))


def test_sweep_sequence_non_increasing():
    op = build_mpo(ModelSpec("xy", 10, gamma=0.5, lam=0.75))
    _, report = ground_state(op, DmrgConfig(schedule=(8,), max_sweeps=6, energy_tol=1e-14))
    e = np.array(report.energies)
    assert np.all(np.diff(e) <= 1e-10)
    assert min(report.variances) >= -1e-10


def test_first_sweep_lowers_energy(rng):
    op = build_mpo(ModelSpec("xy", 10, gamma=0.0, lam=0.5))
    state = canonicalize(random_mps(10, 2, 4, seed=rng, dtype=float), "right")
    before = expectation_mpo(state, op).real
    envs = Environments(state, op)
    new, _, _, _ = sweep_once(state, envs, DmrgConfig(schedule=(4,)))
    assert expectation_mpo(new, op).real < before
    assert new.center == 0


def test_sweep_on_eigenstate_is_fixed_point():
    op = build_mpo(ModelSpec("majumdar_ghosh", 8))
    state, report = ground_state(op, DmrgConfig(schedule=(4,), max_sweeps=10))
    envs = Environments(canonicalize(state, "right"), op)
    new, _, _, _ = sweep_once(envs.state, envs, DmrgConfig(schedule=(4,)))
    assert abs(expectation_mpo(new, op).real - report.energy) < 1e-10


def test_two_site_adapts_rank():
    """A ferromagnetic ZZ chain keeps at most rank two from a wide random start."""
    Z = PAULI["Z"]
    spec = ModelSpec("custom", 8, d=2,
                     terms=tuple({"sites": (j, j + 1), "op": -np.kron(Z, Z)} for j in range(7)))
    state, report = ground_state(build_mpo(spec), DmrgConfig(schedule=(8,), max_sweeps=6, svd_tol=1e-12))
    assert report.energy == pytest.approx(-7.0, abs=1e-10)
    assert state.max_bond <= 2


def test_single_site_with_noise():
    op = build_mpo(ModelSpec("xy", 10, gamma=0.0, lam=0.5))
    cfg = DmrgConfig(schedule=(16,), mode="single-site", max_sweeps=20, noise=1e-3)
    _, report = ground_state(op, cfg)
    assert abs(report.energy - XY_N10_G0_L05_E0) < 1e-8


def test_stale_environment_detected(rng):
    op = build_mpo(ModelSpec("xy", 6))
    a = canonicalize(random_mps(6, 2, 2, seed=rng), "right")
    b = canonicalize(random_mps(6, 2, 2, seed=rng), "right")
    envs = Environments(a, op)
    with pytest.raises(StaleEnvironmentError):
        sweep_once(b, envs, DmrgConfig(schedule=(2,)))


def test_mixed_canonical_metric_is_identity(rng):
    """At the center the local norm matrix K2 is the identity."""
    for _ in range(10):
        n = int(rng.integers(4, 9))
        c = int(rng.integers(0, n))
        state = canonicalize(random_mps(n, 2, 6, seed=rng), "mixed", c)
        cache = EnvironmentCache(state)
        L, R = cache.left[c], cache.right[c + 1]
        K2 = np.kron(L, np.eye(2)).reshape(L.shape[0], 2, L.shape[1], 2)
        assert np.max(np.abs(L - np.eye(L.shape[0]))) < 1e-10
        assert np.max(np.abs(R - np.eye(R.shape[0]))) < 1e-10
        assert K2.shape[0] * K2.shape[1] == state.tensors[c].shape[0] * 2


def test_restart_determinism():
    op = build_mpo(ModelSpec("heisenberg_spin1", 6))
    cfg = DmrgConfig(schedule=(4, 8), max_sweeps=4, seed=11)
    _, a = ground_state(op, cfg)
    _, b = ground_state(op, cfg)
    assert a.energies == b.energies


def test_non_convergence_is_reported():
    op = build_mpo(ModelSpec("xy", 10, gamma=0.5, lam=0.75))
    _, report = ground_state(op, DmrgConfig(schedule=(2, 4, 8), max_sweeps=1))
    assert report.converged is False
    assert report.sweeps == 1


def test_rejects_bad_operators():
    H = build_mpo(ModelSpec("xy", 4))
    skew = MatrixProductOperator(H.tensors, H.boundary, hermitian=False)
    with pytest.raises(SymmetryError):
        ground_state(skew)
    with pytest.raises(BoundaryError):
        ground_state(build_mpo(ModelSpec("xy", 4, "periodic")))


def test_variance_eigenstate_and_dense(rng):
    spec = ModelSpec("xy", 8, gamma=0.0, lam=0.3)
    op = build_mpo(spec)
    assert abs(energy_variance(basis_state("0" * 8), op)) < 1e-9
    state = random_mps(8, 2, 4, seed=rng)
    psi = to_dense(state)
    H = ed.dense_hamiltonian(spec)
    e = np.vdot(psi, H @ psi).real
    var = np.vdot(H @ psi, H @ psi).real - e**2
    e_mps, var_mps = energy_and_variance(state, op)
    assert abs(e_mps - e) < 1e-9 and abs(var_mps - var) < 1e-9


def test_report_outputs(tmp_path):
    op = build_mpo(ModelSpec("xy", 6, lam=0.5))
    _, report = ground_state(op, DmrgConfig(schedule=(4,), max_sweeps=3))
    report.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "sweep,energy,variance,max_trunc_weight"
    assert len(lines) == report.sweeps + 1
    data = json.loads(report.to_json())
    assert data["energy"] == report.energy and isinstance(DmrgReport(), DmrgReport)


def test_complex_hamiltonian_from_real_start(rng):
    """A complex Hermitian MPO optimized from a real initial state still reaches E0."""
    Y = PAULI["Y"]
    h = np.kron(PAULI["X"], Y) - np.kron(Y, PAULI["X"]) + 0.3 * np.kron(PAULI["Z"], PAULI["Z"])
    spec = ModelSpec("custom", 6, d=2, terms=tuple({"sites": (j, j + 1), "op": h} for j in range(5)))
    op = build_mpo(spec)
    assert np.iscomplexobj(np.zeros(0, op.dtype))
    init = random_mps(6, 2, 4, seed=rng, dtype=float)
    _, report = ground_state(op, DmrgConfig(schedule=(8,), max_sweeps=10), init=init)
    assert abs(report.energy - ed.solve(spec)[0].ground_energy) < 1e-8
