import numpy as np
import pytest

from tnet import ed
from tnet.errors import DimensionError, ModelError
from tnet.mpo import (PAULI, MatrixProductOperator, ModelSpec, apply_mpo, bond_terms, build_mpo,
                      expectation_mpo, identity_mpo, load_model, save_model, site_sum_mpo,
                      spin1_operators)
from tnet.mps import basis_state, build_fixture, random_mps, to_dense

X, Y, Z = PAULI["X"], PAULI["Y"], PAULI["Z"]

SMALL_SPECS = [
    ModelSpec("xy", 6, gamma=0.3, lam=0.7),
    ModelSpec("xy", 6, "periodic", gamma=-0.4, lam=0.2),
    ModelSpec("heisenberg_spin1", 5, J=1.3),
    ModelSpec("heisenberg_spin1", 4, "periodic"),
    ModelSpec("aklt", 5),
    ModelSpec("aklt", 4, "periodic"),
    ModelSpec("majumdar_ghosh", 7),
    ModelSpec("majumdar_ghosh", 6, "periodic"),
]


def test_xy_two_sites_printed_coefficients():
    """xy(n=2, gamma=1, lam=0) densifies to -(1/2)(1/2) X (x) X."""
    H = build_mpo(ModelSpec("xy", 2, gamma=1.0, lam=0.0)).to_dense()
    np.testing.assert_allclose(H, -0.25 * np.kron(X, X), atol=1e-15)


@pytest.mark.parametrize("spec", SMALL_SPECS, ids=lambda s: f"{s.kind}-{s.boundary}")
def test_mpo_matches_kronecker_oracle(spec):
    H_mpo = build_mpo(spec).to_dense()
    H_ed = ed.dense_hamiltonian(spec)
    assert np.max(np.abs(H_mpo - H_ed)) < 1e-12
    assert np.max(np.abs(H_mpo - H_mpo.conj().T)) < 1e-12


def test_xy_n10_matches_oracle():
    spec = ModelSpec("xy", 10, gamma=0.5, lam=0.75)
    assert np.max(np.abs(build_mpo(spec).to_dense() - ed.dense_hamiltonian(spec))) < 1e-12


def test_op_bond_dims_within_limits():
    limits = {"xy": 4, "heisenberg_spin1": 5, "aklt": 14, "majumdar_ghosh": 8}
    for kind, cap in limits.items():
        op = build_mpo(ModelSpec(kind, 8))
        assert max(op.op_bond_dims) <= cap


def test_aklt_local_term_is_projector():
    """The two-site AKLT term satisfies h^2 = h with spectrum in {0, 1}."""
    h = build_mpo(ModelSpec("aklt", 2)).to_dense()
    np.testing.assert_allclose(h @ h, h, atol=1e-12)
    w = np.linalg.eigvalsh(h)
    assert np.all(np.minimum(abs(w), abs(w - 1)) < 1e-12)
    assert int(round(w.sum())) == 5


def test_spin1_algebra():
    s = spin1_operators()
    comm = s["Sx"] @ s["Sy"] - s["Sy"] @ s["Sx"]
    np.testing.assert_allclose(comm, 1j * s["Sz"], atol=1e-15)
    casimir = s["Sx"] @ s["Sx"] + s["Sy"] @ s["Sy"] + s["Sz"] @ s["Sz"]
    np.testing.assert_allclose(casimir, 2 * np.eye(3), atol=1e-15)


def test_identity_mpo_keeps_state(rng):
    state = random_mps(5, 2, 3, seed=rng)
    out = apply_mpo(identity_mpo(state.phys_dims), state)
    np.testing.assert_allclose(to_dense(out), to_dense(state), atol=1e-14)


def test_site_sum_on_eigenstate():
    """Sum of Z_j on |0..0> gives n |0..0>."""
    state = basis_state("00000")
    out = apply_mpo(site_sum_mpo(Z, 5), state)
    np.testing.assert_allclose(to_dense(out), 5 * to_dense(state), atol=1e-14)
    assert expectation_mpo(state, site_sum_mpo(Z, 5)) == pytest.approx(5.0)


def test_apply_xy_matches_dense(rng):
    spec = ModelSpec("xy", 8, gamma=0.3, lam=0.4)
    state = random_mps(8, 2, 4, seed=rng)
    out = apply_mpo(build_mpo(spec), state)
    expected = ed.dense_hamiltonian(spec) @ to_dense(state)
    assert np.max(np.abs(to_dense(out) - expected)) < 1e-10


def test_expectation_matches_dense(rng):
    for spec in SMALL_SPECS:
        if spec.boundary == "periodic":
            continue
        state = random_mps(spec.n, spec.local_dim, 4, seed=rng)
        psi = to_dense(state)
        dense = np.vdot(psi, ed.dense_hamiltonian(spec) @ psi)
        assert abs(expectation_mpo(state, build_mpo(spec)) - dense) < 1e-10


def test_ghz_xy_expectation_zero():
    for gamma, lam in ((0.0, 0.5), (0.7, 1.3)):
        ghz = build_fixture("ghz", 5)
        assert abs(expectation_mpo(ghz, build_mpo(ModelSpec("xy", 5, gamma=gamma, lam=lam)))) < 1e-12


def test_aklt_periodic_annihilated():
    state = build_fixture("aklt", 8, "periodic")
    op = build_mpo(ModelSpec("aklt", 8, "periodic"))
    assert abs(expectation_mpo(state, op)) < 1e-10


def test_shape_mismatch():
    with pytest.raises(DimensionError):
        expectation_mpo(basis_state("000"), build_mpo(ModelSpec("xy", 4)))
    with pytest.raises(DimensionError):
        apply_mpo(build_mpo(ModelSpec("aklt", 3)), basis_state("000"))


def test_spec_validation():
    with pytest.raises(ModelError):
        ModelSpec("toric", 4)
    with pytest.raises(ModelError):
        ModelSpec("majumdar_ghosh", 2)
    with pytest.raises(ModelError):
        ModelSpec("xy", 4, gamma=float("nan"))


def test_spec_json_round_trip(tmp_path):
    spec = ModelSpec("xy", 6, "periodic", gamma=0.25, lam=-1.5)
    assert ModelSpec.from_json(spec.to_json()) == spec
    save_model(tmp_path / "m.json", spec)
    back = load_model(tmp_path / "m.json")
    np.testing.assert_array_equal(ed.dense_hamiltonian(back), ed.dense_hamiltonian(spec))


def test_custom_model_terms():
    h = np.kron(X, X) + 0.5 * np.kron(Z, np.eye(2))
    spec = ModelSpec("custom", 4, d=2, terms=tuple({"sites": (j, j + 1), "op": h} for j in range(3)))
    H = build_mpo(spec).to_dense()
    expected = sum(np.kron(np.kron(np.eye(2**j), h), np.eye(2 ** (2 - j))) for j in range(3))
    np.testing.assert_allclose(H, expected, atol=1e-13)
    assert ModelSpec.from_json(spec.to_json()).to_json() == spec.to_json()


def test_bond_terms_sum_to_hamiltonian():
    spec = ModelSpec("heisenberg_spin1", 4, J=0.7)
    terms = bond_terms(spec)
    H = sum(np.kron(np.kron(np.eye(3**b), h), np.eye(3 ** (2 - b))) for b, h in enumerate(terms))
    np.testing.assert_allclose(H, ed.dense_hamiltonian(spec), atol=1e-13)
    with pytest.raises(ModelError):
        bond_terms(ModelSpec("majumdar_ghosh", 5))


def test_majumdar_ghosh_dimer_energy():
    """ED ground energy equals the dimer product energy at n = 6, 8."""
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    for n in (6, 8):
        spec = ModelSpec("majumdar_ghosh", n)
        dimers = singlet
        for _ in range(n // 2 - 1):
            dimers = np.kron(dimers, singlet)
        e_dimer = np.vdot(dimers, ed.dense_hamiltonian(spec) @ dimers).real
        summary, _ = ed.solve(spec)
        assert summary.ground_energy == pytest.approx(e_dimer, abs=1e-9)


def test_mpo_tensor_validation():
    with pytest.raises(DimensionError):
        MatrixProductOperator((np.zeros((1, 2, 2, 2)), np.zeros((3, 1, 2, 2))))


def test_named_models_are_real():
    """Real Hamiltonians give real MPO tensors, so DMRG can stay in real arithmetic."""
    for kind in ("xy", "heisenberg_spin1", "aklt", "majumdar_ghosh"):
        assert build_mpo(ModelSpec(kind, 5)).dtype == np.float64
