import io
import json
import struct

import numpy as np
import pytest

from tnet.errors import (BipartitionError, ConvergenceError, DimensionError, LabelError,
                         SymmetryError)
from tnet.mps import AKLT_MATRICES
from tnet.expectation import transfer_matrix
from tnet.tensor import (MAGIC, Tensor, contract, eig_general, eig_lowest, load_tensor,
                         read_tnet, save_tensor, svd_split, tnet_bytes, trace, truncation_rank)


def _rand(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_tensor_rejects_duplicate_labels():
    """Labels must be unique and match the array order."""
    with pytest.raises(LabelError):
        Tensor(np.zeros((2, 2)), ["a", "a"])
    with pytest.raises(DimensionError):
        Tensor(np.zeros((2, 2)), ["a"])


def test_tensor_is_immutable():
    t = Tensor(np.eye(2), ["a", "b"])
    with pytest.raises(ValueError):
        t.data[0, 0] = 5


def test_contract_identity_returns_operand(rng):
    """2x2 identity contracted with M over one index gives M."""
    M = _rand(rng, 2, 2)
    out = contract(Tensor(np.eye(2), ["i", "k"]), Tensor(M, ["k", "j"]), [("k", "k")])
    assert out.labels == ("i", "j")
    np.testing.assert_allclose(out.data, M, atol=1e-15)


def test_contract_matches_triple_loop(rng):
    """C = AB agrees with the explicit sum over the shared index."""
    A, B = _rand(rng, 3, 3), _rand(rng, 3, 3)
    C = contract(Tensor(A, ["a", "g"]), Tensor(B, ["g", "b"]), [("g", "g")]).data
    naive = np.zeros((3, 3), dtype=complex)
    for a in range(3):
        for b in range(3):
            for g in range(3):
                naive[a, b] += A[a, g] * B[g, b]
    np.testing.assert_allclose(C, naive, atol=1e-13)


def test_trace_of_identity():
    """Self-contraction of the D x D identity gives D."""
    out = trace(Tensor(np.eye(5), ["a", "b"]), "a", "b")
    assert out.order == 0
    assert out.data == pytest.approx(5.0)


def test_contract_errors():
    a = Tensor(np.zeros((2, 3)), ["i", "j"])
    b = Tensor(np.zeros((4, 2)), ["k", "l"])
    with pytest.raises(DimensionError):
        contract(a, b, [("j", "k")])
    with pytest.raises(LabelError):
        contract(a, b, [("x", "k")])


def test_contraction_associative(rng):
    """A three-tensor chain contracted in either order agrees to 1e-12."""
    for _ in range(20):
        d = rng.integers(1, 9, size=4)
        A = Tensor(_rand(rng, d[0], d[1]), ["a", "b"])
        B = Tensor(_rand(rng, d[1], d[2]), ["b", "c"])
        C = Tensor(_rand(rng, d[2], d[3]), ["c", "e"])
        left = contract(contract(A, B, [("b", "b")]), C, [("c", "c")]).data
        right = contract(A, contract(B, C, [("c", "c")]), [("b", "b")]).data
        assert np.max(np.abs(left - right)) <= 1e-12 * max(1.0, np.max(np.abs(left)))


def test_svd_identity():
    res = svd_split(Tensor(np.eye(4), ["a", "b"]), ["a"])
    np.testing.assert_allclose(res.singular_values, 1.0, atol=1e-15)
    assert res.truncation_weight == 0.0


def test_svd_rank_one(rng):
    u, v = _rand(rng, 5), _rand(rng, 5)
    res = svd_split(Tensor(np.outer(u, v.conj()), ["a", "b"]), ["a"])
    assert np.sum(res.singular_values > 1e-12 * res.singular_values[0]) == 1


def test_svd_reconstruction_and_isometries(rng):
    """Untruncated split of a random 8x8 matrix reassembles to 1e-12."""
    M = _rand(rng, 8, 8)
    res = svd_split(Tensor(M, ["a", "b"]), ["a"])
    U, s, V = res.left_isometry.data, res.singular_values, res.right_isometry.data
    assert np.max(np.abs(U @ np.diag(s) @ V - M)) < 1e-12
    np.testing.assert_allclose(U.conj().T @ U, np.eye(8), atol=1e-12)
    np.testing.assert_allclose(V @ V.conj().T, np.eye(8), atol=1e-12)
    assert np.all(np.diff(s) <= 0)


def test_svd_truncation_weight_exact(rng):
    M = _rand(rng, 6, 6)
    full = np.linalg.svd(M, compute_uv=False)
    res = svd_split(Tensor(M, ["a", "b"]), ["a"], max_rank=3)
    assert res.rank == 3
    assert res.truncation_weight == pytest.approx(np.sum(full[3:] ** 2), rel=1e-12)


def test_truncation_rank_rule():
    """Smallest rank with relative discarded weight <= tol, then the cap."""
    s = np.sqrt(np.array([0.5, 0.3, 0.15, 0.05]))
    assert truncation_rank(s, tol=0.05) == 3
    assert truncation_rank(s, tol=0.2) == 2
    assert truncation_rank(s, max_rank=1, tol=0.05) == 1
    assert truncation_rank(s) == 4


def test_svd_bipartition_errors():
    t = Tensor(np.zeros((2, 2, 2)), ["a", "b", "c"])
    with pytest.raises(BipartitionError):
        svd_split(t, [])
    with pytest.raises(BipartitionError):
        svd_split(t, ["a", "b", "c"])
    with pytest.raises(LabelError):
        svd_split(t, ["z"])


def test_svd_multi_index_split(rng):
    t = Tensor(_rand(rng, 2, 3, 4), ["a", "b", "c"])
    res = svd_split(t, ["a", "c"])
    weighted = Tensor(res.singular_values[:, None] * res.right_isometry.data,
                      res.right_isometry.labels)
    back = contract(res.left_isometry, weighted, [("bond", "bond")])
    np.testing.assert_allclose(back.transpose(["a", "b", "c"]).data, t.data, atol=1e-12)
    assert np.sum(res.singular_values**2) == pytest.approx(t.norm() ** 2, rel=1e-12)


def test_eig_lowest_pauli_z():
    val, vec = eig_lowest(np.diag([1.0, -1.0]))
    assert val == pytest.approx(-1.0)
    assert abs(abs(vec[1]) - 1.0) < 1e-12


def test_eig_lowest_pauli_x():
    val, vec = eig_lowest(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert val == pytest.approx(-1.0)
    assert abs(abs(np.vdot(vec, np.array([1, -1]) / np.sqrt(2))) - 1.0) < 1e-12


def test_eig_lowest_two_site_xy():
    """Two-site XX term matches full diagonalization to 1e-12."""
    X = np.array([[0, 1], [1, 0]])
    Y = np.array([[0, -1j], [1j, 0]])
    H = -0.5 * (np.kron(X, X) / 4 + np.kron(Y, Y) / 4)
    val, _ = eig_lowest(H)
    assert abs(val - np.linalg.eigvalsh(H)[0]) < 1e-12


def test_eig_lowest_krylov_path(rng):
    """Above the dense threshold the Lanczos result still has a small residual."""
    M = _rand(rng, 200, 200)
    H = M + M.conj().T
    val, vec = eig_lowest(H, tol=1e-10)
    assert abs(val - np.linalg.eigvalsh(H)[0]) < 1e-9
    assert np.linalg.norm(H @ vec - val * vec) < 1e-8


def test_eig_lowest_below_rayleigh_quotient(rng):
    M = _rand(rng, 10, 10)
    H = M + M.conj().T
    guess = _rand(rng, 10)
    val, _ = eig_lowest(H, guess=guess)
    assert val <= np.vdot(guess, H @ guess).real / np.vdot(guess, guess).real + 1e-12


def test_eig_lowest_errors():
    with pytest.raises(SymmetryError):
        eig_lowest(np.array([[0.0, 1.0], [0.0, 0.0]]))
    rng = np.random.default_rng(0)
    M = rng.standard_normal((300, 300))
    with pytest.raises(ConvergenceError) as info:
        eig_lowest(M + M.T, tol=1e-14, maxiter=2)
    assert info.value.residual > 0


def test_eig_lowest_on_tensor():
    t = Tensor(np.diag([2.0, -3.0, 1.0, 0.5]).reshape(2, 2, 2, 2), ["a", "b", "a2", "b2"])
    val, _ = eig_lowest(t)
    assert val == pytest.approx(-3.0)


def test_eig_general_diagonal():
    """diag(3, 1, 1, -1) sorts to moduli (3, 1, 1, 1) with the sign kept."""
    spec = eig_general(np.diag([1.0, -1.0, 3.0, 1.0]))
    np.testing.assert_allclose(np.abs(spec.eigenvalues), [3, 1, 1, 1])
    assert sorted(spec.eigenvalues.real.round(12)) == [-1, 1, 1, 3]
    np.testing.assert_allclose(spec.left @ spec.right, np.eye(4), atol=1e-12)


def test_eig_general_rotation():
    spec = eig_general(np.array([[0.0, -1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(sorted(spec.eigenvalues.imag), [-1, 1], atol=1e-14)
    np.testing.assert_allclose(spec.eigenvalues.real, 0, atol=1e-14)


def test_eig_general_aklt_unrescaled():
    """AKLT transfer matrix has spectrum {3, -1, -1, -1} before rescaling."""
    A = AKLT_MATRICES.transpose(1, 0, 2)
    spec = eig_general(transfer_matrix(A))
    np.testing.assert_allclose(spec.eigenvalues, [3, -1, -1, -1], atol=1e-12)
    assert not spec.defective


def test_eig_general_flags_defective():
    spec = eig_general(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert spec.defective
    assert np.all(np.isnan(spec.right))


def test_tnet_roundtrip(tmp_path, rng):
    t = Tensor(_rand(rng, 2, 3, 4), ["x", "y", "z"])
    save_tensor(tmp_path / "t.tnet", t)
    back = load_tensor(tmp_path / "t.tnet")
    assert back.labels == t.labels
    np.testing.assert_array_equal(back.data, t.data)


def test_tnet_byte_layout():
    """Magic, byte-order mark, JSON header, then little-endian (re, im) float64 pairs."""
    t = Tensor(np.array([[1 + 2j, 3.0], [0.0, -1j]]), ["a", "b"])
    blob = tnet_bytes([t])
    assert blob.startswith(MAGIC)
    bom, size = struct.unpack("<HI", blob[5:11])
    assert bom == 0x0102
    header = json.loads(blob[11:11 + size])
    assert header["tensors"] == [{"labels": ["a", "b"], "dims": [2, 2]}]
    payload = np.frombuffer(blob[11 + size:], dtype="<f8")
    np.testing.assert_array_equal(payload, [1, 2, 3, 0, 0, 0, 0, -1])
    tensors, _ = read_tnet(io.BytesIO(blob))
    np.testing.assert_array_equal(tensors[0].data, t.data)


def test_tnet_rejects_bad_magic():
    with pytest.raises(ValueError):
        read_tnet(io.BytesIO(b"NOPE1" + b"\0" * 10))
