import numpy as np
import pytest
import scipy.linalg

from tnet import ed
from tnet.dmrg import DmrgConfig, ground_state
from tnet.errors import ModelError, NormalizationError
from tnet.expectation import local_expectation
from tnet.mpo import PAULI, ModelSpec, bond_terms, build_mpo
from tnet.mps import basis_state, load_mps, save_mps, to_dense
from tnet.tebd import build_plan, dense_step, evolve, evolve_imaginary

from oracles import NEEL_Z3_T1

X, Z = PAULI["X"], PAULI["Z"]


def _field_model(n, op):
    return ModelSpec("custom", n, d=2, terms=tuple({"sites": (j,), "op": op} for j in range(n)))


def test_field_only_gates_are_diagonal():
    plan = build_plan(_field_model(4, -0.35 * Z), 0.1)
    for _, gates in plan.layers:
        for g in gates:
            np.testing.assert_allclose(g, np.diag(np.diag(g)), atol=1e-15)


def test_xy_gate_is_dense_exponential():
    spec = ModelSpec("xy", 6, gamma=0.4, lam=0.8)
    dt = 0.07
    plan = build_plan(spec, dt, order=1)
    terms = bond_terms(spec)
    for b, g in zip(range(0, 5, 2), plan.even_gates):
        np.testing.assert_allclose(g, scipy.linalg.expm(-1j * dt * terms[b]), atol=1e-12)
    for g in plan.even_gates + plan.odd_gates:
        np.testing.assert_allclose(g @ g.conj().T, np.eye(4), atol=1e-12)


def test_second_order_is_time_symmetric():
    spec = ModelSpec("xy", 4, gamma=0.3, lam=0.6)
    U = dense_step(build_plan(spec, 0.1))
    V = dense_step(build_plan(spec, -0.1))
    assert np.max(np.abs(U @ V - np.eye(16))) < 1e-12


def test_single_spin_rotation():
    """|0> under -(h/2) X rotates as <Z>(t) = cos(h t)."""
    h = 1.3
    plan = build_plan(_field_model(3, -0.5 * h * X), 0.05, steps=40)
    state, _ = evolve(basis_state("000"), plan)
    assert local_expectation(state, Z, 1).real == pytest.approx(np.cos(h * plan.total_time), abs=1e-12)


def test_zero_steps_is_identity():
    start = basis_state("0101")
    state, trace = evolve(start, build_plan(ModelSpec("xy", 4), 0.1, steps=0))
    assert abs(np.vdot(to_dense(state), to_dense(start))) == pytest.approx(1.0)
    assert trace.times == [0.0]


def test_neel_quench_against_dense_propagator():
    """The TEBD error shrinks as dt^2 toward the exact free-fermion value."""
    spec = ModelSpec("xy", 8, gamma=0.0, lam=0.0)
    H = ed.dense_hamiltonian(spec)
    psi0 = to_dense(basis_state("01010101"))
    psi = scipy.linalg.expm(-1j * H) @ psi0
    exact = np.vdot(psi, ed.local_operator({3: Z}, 8, 2) @ psi).real
    assert exact == pytest.approx(NEEL_Z3_T1, abs=1e-12)
    errs = []
    for dt in (0.1, 0.05, 0.025):
        plan = build_plan(spec, dt, steps=round(1 / dt))
        state, _ = evolve(basis_state("01010101"), plan)
        errs.append(abs(local_expectation(state, Z, 3).real - exact))
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(slopes - 2) < 0.3)


def test_first_order_exponent():
    """Order-1 splitting: the state error shrinks linearly in dt.

    Expectation values of real observables under a real Hamiltonian lose the
    first-order term, so the check uses the state vector itself.
    """
    spec = ModelSpec("xy", 6, gamma=0.5, lam=0.4)
    H = ed.dense_hamiltonian(spec)
    exact = scipy.linalg.expm(-1j * 0.5 * H) @ to_dense(basis_state("010101"))
    errs = []
    for dt in (0.05, 0.025, 0.0125):
        state, _ = evolve(basis_state("010101"), build_plan(spec, dt, order=1, steps=round(0.5 / dt)))
        errs.append(np.linalg.norm(to_dense(state) - exact))
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(slopes - 1) < 0.3)


def test_unitary_run_conserves_norm_and_energy():
    spec = ModelSpec("xy", 8, gamma=0.0, lam=0.3)
    state, trace = evolve(basis_state("01010101"), build_plan(spec, 0.05, steps=40))
    assert state.norm() == pytest.approx(1.0, abs=1e-10)
    assert np.ptp(trace.energies) < 1e-8
    assert trace.trunc_cum[-1] == 0.0


def test_entropy_grows_until_saturation():
    spec = ModelSpec("xy", 10, gamma=0.0, lam=0.0)
    _, trace = evolve(basis_state("0101010101"), build_plan(spec, 0.05, steps=60), D_max=4)
    s = np.array(trace.s_mid)
    assert s[0] == 0.0
    growing = s[: int(np.argmax(s >= 2 - 1e-6)) or len(s)]
    assert np.all(np.diff(growing) >= -1e-10)
    assert s.max() <= 2 + 1e-10
    assert trace.trunc_cum[-1] > 0


def test_imaginary_time_fixed_point():
    """An exact ground state barely moves over 100 imaginary-time steps."""
    spec = ModelSpec("xy", 8, gamma=0.5, lam=1.0)
    gs, rep = ground_state(build_mpo(spec), DmrgConfig(schedule=(32,), max_sweeps=10))
    _, trace = evolve_imaginary(gs, build_plan(spec, 0.01, steps=100, imaginary=True))
    assert np.max(np.abs(np.array(trace.energies) - rep.energy)) < 1e-8


def test_imaginary_time_normalizes_and_descends():
    spec = ModelSpec("xy", 8, gamma=0.5, lam=1.0)
    state, trace = evolve_imaginary(basis_state("01100110"), build_plan(spec, 0.05, steps=60, imaginary=True),
                                    D_max=16)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(trace.energies) <= 1e-10)
    assert trace.energies[-1] < trace.energies[0]


def test_resume_from_checkpoint(tmp_path):
    spec = ModelSpec("xy", 6, gamma=0.2, lam=0.5)
    start = basis_state("011010")
    full, _ = evolve(start, build_plan(spec, 0.05, steps=20))
    half, trace = evolve(start, build_plan(spec, 0.05, steps=10))
    save_mps(tmp_path / "ck.tnet", half)
    resumed, trace2 = evolve(load_mps(tmp_path / "ck.tnet"), build_plan(spec, 0.05, steps=10),
                             t0=trace.times[-1], trunc0=trace.trunc_cum[-1])
    assert trace2.times[-1] == pytest.approx(1.0)
    assert abs(abs(np.vdot(to_dense(full), to_dense(resumed))) - 1) < 1e-12


def test_plan_errors():
    with pytest.raises(ModelError):
        build_plan(ModelSpec("majumdar_ghosh", 6), 0.1)
    with pytest.raises(ValueError):
        build_plan(ModelSpec("xy", 4), 0.1, order=3)
    plan = build_plan(ModelSpec("xy", 4), 0.1)
    with pytest.raises(ValueError):
        evolve_imaginary(basis_state("0000"), plan)
    with pytest.raises(NormalizationError):
        start = basis_state("0000")
        evolve(start.with_tensors([2 * t for t in start.tensors]), plan)


def test_trace_csv(tmp_path):
    _, trace = evolve(basis_state("0101"), build_plan(ModelSpec("xy", 4), 0.1, steps=3))
    trace.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,energy,S_mid,trunc_cum"
    assert len(lines) == 5
