"""Exact diagonalization and dense density-matrix tools for small chains.

This module is the reference the tensor-network code is checked against, so
the Hamiltonians here are assembled directly from Kronecker products of the
local matrices written out below. It only shares :class:`ModelSpec` with the
MPO builders.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import entropy
from .errors import DimensionError, SizeError
from .mpo import ModelSpec

ED_CAP = 2**14
DENSE_SOLVE_CAP = 2**10
GIBBS_CAP = 2**12
DEGENERACY_TOL = 1e-9

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _spin1():
    r = 1 / np.sqrt(2)
    sx = np.array([[0, r, 0], [r, 0, r], [0, r, 0]], dtype=complex)
    sy = np.array([[0, -1j * r, 0], [1j * r, 0, -1j * r], [0, 1j * r, 0]], dtype=complex)
    sz = np.diag([1, 0, -1]).astype(complex)
    return sx, sy, sz


def _embed(local: dict[int, np.ndarray], n: int, d: int) -> sp.csr_matrix:
    """Sparse ``op_1 (x) ... (x) op_n`` with identities on unlisted sites."""
    out = sp.identity(1, dtype=complex, format="csr")
    eye = sp.identity(d, dtype=complex, format="csr")
    for j in range(n):
        out = sp.kron(out, sp.csr_matrix(local[j]) if j in local else eye, format="csr")
    return out


def _bonds(n, boundary, dist):
    if boundary == "open":
        return [(j, j + dist) for j in range(n - dist)]
    return [(j, (j + dist) % n) for j in range(n)]


def _dot(vec_a, vec_b, j, k, n, d):
    return sum(_embed({j: a, k: b}, n, d) if j != k else _embed({j: a @ b}, n, d)
               for a, b in zip(vec_a, vec_b))


def dense_hamiltonian(spec: ModelSpec, cap: int = ED_CAP, sparse: bool = False):
    """Hamiltonian matrix of ``spec`` from explicit Kronecker sums.

    Returns a dense array, or a CSR matrix when ``sparse`` is true. The
    result is real whenever every matrix element is.
    """
    n, d = spec.n, spec.local_dim
    if d**n > cap:
        raise SizeError(f"Hilbert space dimension {d**n} exceeds cap {cap}")
    H = sp.csr_matrix((d**n, d**n), dtype=complex)
    if spec.kind == "xy":
        for j, k in _bonds(n, spec.boundary, 1):
            H = H - 0.5 * ((1 + spec.gamma) / 4 * _embed({j: _X, k: _X}, n, d)
                           + (1 - spec.gamma) / 4 * _embed({j: _Y, k: _Y}, n, d))
        for j in range(n):
            H = H - spec.lam / 2 * _embed({j: _Z}, n, d)
    elif spec.kind in ("heisenberg_spin1", "aklt"):
        S = _spin1()
        for j, k in _bonds(n, spec.boundary, 1):
            ss = _dot(S, S, j, k, n, d)
            if spec.kind == "heisenberg_spin1":
                H = H + spec.J * ss
            else:
                H = H + 0.5 * ss + (ss @ ss) / 6 + sp.identity(d**n, format="csr") / 3
    elif spec.kind == "majumdar_ghosh":
        sig = (_X, _Y, _Z)
        for j, k in _bonds(n, spec.boundary, 1):
            H = H + 2 * _dot(sig, sig, j, k, n, d)
        for j, k in _bonds(n, spec.boundary, 2):
            H = H + _dot(sig, sig, j, k, n, d)
    else:
        for t in spec.terms:
            sites = list(t["sites"])
            left = d ** sites[0]
            right = d ** (n - sites[-1] - 1)
            H = H + sp.kron(sp.kron(sp.identity(left), sp.csr_matrix(np.asarray(t["op"]))),
                            sp.identity(right), format="csr")
    H = H.tocsr()
    if not np.any(H.data.imag):
        H = H.real
    if sparse:
        return H
    return H.toarray()


@dataclass(frozen=True)
class SpectralSummary:
    ground_energy: float
    gap: float
    degeneracy: int
    n_levels: int

    def to_dict(self) -> dict:
        return asdict(self)


def solve(spec: ModelSpec, k: int = 8, tol: float = DEGENERACY_TOL, cap: int = ED_CAP):
    """Ground energy, gap and ground space of ``spec``.

    Dense ``eigh`` up to :data:`DENSE_SOLVE_CAP` states, sparse Lanczos for
    the lowest ``k`` levels above that (so a ground space wider than ``k - 1``
    levels is undercounted there). The gap is measured from the ground
    space (levels within ``tol`` of the minimum) to the next distinct level.

    Returns ``(summary, ground_vectors)`` with vectors as columns.
    """
    dim = spec.local_dim**spec.n
    if dim > cap:
        raise SizeError(f"Hilbert space dimension {dim} exceeds cap {cap}")
    if dim <= DENSE_SOLVE_CAP:
        w, v = np.linalg.eigh(dense_hamiltonian(spec, cap))
    else:
        H = dense_hamiltonian(spec, cap, sparse=True)
        w, v = spla.eigsh(H, k=min(k, dim - 2), which="SA", tol=1e-13)
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    e0 = w[0]
    ground = np.abs(w - e0) <= tol
    deg = int(ground.sum())
    gap = float(w[deg] - e0) if deg < len(w) else float("nan")
    return SpectralSummary(float(e0), gap, deg, len(w)), v[:, ground]


def gibbs(spec: ModelSpec, beta: float, cap: int = GIBBS_CAP) -> np.ndarray:
    """Thermal state ``exp(-beta H) / tr exp(-beta H)``."""
    if beta < 0:
        raise ValueError("inverse temperature must be non-negative")
    w, v = np.linalg.eigh(dense_hamiltonian(spec, cap))
    p = np.exp(-beta * (w - w[0]))
    p /= p.sum()
    return (v * p) @ v.conj().T


# --------------------------------------------------------------------------
# Reduced states and entanglement


def _site_dims(size: int, dims) -> list[int]:
    if np.isscalar(dims):
        n = int(round(np.log(size) / np.log(dims)))
        dims = [int(dims)] * n
    dims = [int(x) for x in dims]
    if int(np.prod(dims)) != size:
        raise DimensionError(f"site dims {dims} do not match size {size}")
    return dims


def as_density_matrix(state) -> np.ndarray:
    state = np.asarray(state)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def reduce(state, region: Sequence[int], dims=2) -> np.ndarray:
    """Partial trace keeping the sites in ``region`` (in increasing order).

    ``state`` is a state vector or a density matrix over sites with local
    dimensions ``dims`` (an int for a homogeneous chain).
    """
    state = np.asarray(state)
    size = state.shape[0]
    dims = _site_dims(size, dims)
    n = len(dims)
    keep = sorted(set(int(j) for j in region))
    if len(keep) != len(list(region)) or any(j < 0 or j >= n for j in keep):
        raise ValueError(f"invalid region {list(region)} for {n} sites")
    drop = [j for j in range(n) if j not in keep]
    dk = int(np.prod([dims[j] for j in keep]))
    if state.ndim == 1:
        psi = state.reshape(dims).transpose(keep + drop).reshape(dk, -1)
        return psi @ psi.conj().T
    rho = state.reshape(dims + dims)
    rho = rho.transpose(keep + drop + [n + j for j in keep] + [n + j for j in drop])
    dd = size // dk
    rho = rho.reshape(dk, dd, dk, dd)
    return np.einsum("ajbj->ab", rho)


def partial_transpose(rho: np.ndarray, region: Sequence[int], dims=2) -> np.ndarray:
    rho = np.asarray(rho)
    dims = _site_dims(rho.shape[0], dims)
    n = len(dims)
    t = rho.reshape(dims + dims)
    perm = list(range(2 * n))
    for j in region:
        perm[j], perm[n + j] = n + j, j
    return t.transpose(perm).reshape(rho.shape)


def _spectrum(rho, tol=1e-10) -> np.ndarray:
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w.min(initial=0.0) < -tol:
        raise ValueError(f"density matrix has eigenvalue {w.min():.3e} below zero")
    return np.clip(w, 0.0, None)


@dataclass(frozen=True)
class EntropySuite:
    """Entanglement and correlation measures in bits.

    ``renyi`` maps Renyi index to ``S_alpha(rho_A)``; ``negativity`` is
    ``||rho^{T_A}||_1 - 1`` and ``log_negativity`` its ``log2(||.||_1)``.
    """

    von_neumann: float
    renyi: dict
    mutual_information: float
    negativity: float
    log_negativity: float
    spectrum: np.ndarray

    def to_dict(self) -> dict:
        return {
            "von_neumann": self.von_neumann,
            "renyi": {str(k): v for k, v in self.renyi.items()},
            "mutual_information": self.mutual_information,
            "negativity": self.negativity,
            "log_negativity": self.log_negativity,
        }


RENYI_GRID = (0.0, 0.5, 1.0, 2.0, 3.0, np.inf)


def entropy_suite(state, region: Sequence[int], dims=2, alphas=RENYI_GRID) -> EntropySuite:
    """Entropies of ``rho_A``, mutual information ``I(A, B)`` and negativity.

    ``B`` is the complement of ``region``.
    """
    rho = as_density_matrix(state)
    all_dims = _site_dims(rho.shape[0], dims)
    n = len(all_dims)
    region = sorted(int(j) for j in region)
    comp = [j for j in range(n) if j not in region]
    p_a = _spectrum(reduce(rho, region, all_dims))
    p_b = _spectrum(reduce(rho, comp, all_dims)) if comp else np.array([1.0])
    p_ab = _spectrum(rho)
    s_a = entropy.von_neumann(p_a)
    mi = s_a + entropy.von_neumann(p_b) - entropy.von_neumann(p_ab)
    pt = partial_transpose(rho, region, all_dims)
    trace_norm = float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (pt + pt.conj().T)))))
    return EntropySuite(
        von_neumann=s_a,
        renyi={a: entropy.renyi(p_a, a) for a in alphas},
        mutual_information=float(mi),
        negativity=trace_norm - 1.0,
        log_negativity=float(np.log2(trace_norm)),
        spectrum=np.sort(p_a)[::-1],
    )


def expectation(state, op) -> complex:
    rho_or_psi = np.asarray(state)
    if rho_or_psi.ndim == 1:
        return complex(np.vdot(rho_or_psi, op @ rho_or_psi))
    return complex(np.trace(op @ rho_or_psi))


def local_operator(ops: dict[int, np.ndarray], n: int, d: int) -> np.ndarray:
    """Dense ``op`` embedding of single-site matrices at the given sites."""
    return _embed(ops, n, d).toarray()


def summary_json(summary: SpectralSummary) -> str:
    return json.dumps(summary.to_dict(), sort_keys=True)
