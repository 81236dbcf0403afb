"""Matrix product states: construction, gauge, canonical forms, entanglement.

Site tensors are numpy arrays with axes ``(left, phys, right)``. Open chains
have outer bonds of extent one; periodic chains close the product with a
trace over the bond between the last and the first site.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import entropy
from .errors import (
    BoundaryError,
    DimensionError,
    GaugeError,
    ModelError,
    NormalizationError,
    SizeError,
)
from .tensor import Tensor, _svd, load_tensors, save_tensors, truncated_svd

DENSE_CAP = 2**20
SITE_LABELS = ("left", "phys", "right")
_PRUNE = 1e-14


@dataclass(frozen=True, eq=False)
class MatrixProductState:
    """A chain of site tensors ``A[k][alpha, j, beta]``.

    ``gauge`` is one of ``"none"``, ``"left"``, ``"right"`` or ``"mixed"``
    (with ``center`` the site holding the norm). ``schmidt_weights[b]`` is the
    diagonal of the canonical-form weight matrix on bond ``b`` (between sites
    ``b`` and ``b + 1``): squared Schmidt values, positive and summing to one.
    """

    tensors: tuple
    boundary: str = "open"
    gauge: str = "none"
    center: int | None = None
    schmidt_weights: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        tensors = tuple(np.asarray(t) for t in self.tensors)
        object.__setattr__(self, "tensors", tensors)
        if self.boundary not in ("open", "periodic"):
            raise BoundaryError(f"unknown boundary {self.boundary!r}")
        if not tensors:
            raise DimensionError("an MPS needs at least one site")
        for k, t in enumerate(tensors):
            if t.ndim != 3:
                raise DimensionError(f"site {k} tensor has order {t.ndim}, expected 3")
        n = len(tensors)
        for k in range(n - 1):
            if tensors[k].shape[2] != tensors[k + 1].shape[0]:
                raise DimensionError(f"bond {k}: extents {tensors[k].shape[2]} != {tensors[k + 1].shape[0]}")
        if self.boundary == "open":
            if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
                raise DimensionError("open-boundary end tensors need outer bonds of extent 1")
        elif tensors[-1].shape[2] != tensors[0].shape[0]:
            raise DimensionError("periodic wrap bond extents do not match")

    @property
    def n(self) -> int:
        return len(self.tensors)

    def __len__(self):
        return len(self.tensors)

    @property
    def phys_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[1] for t in self.tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        """Internal bond extents; periodic chains append the wrap bond."""
        dims = tuple(t.shape[2] for t in self.tensors[:-1])
        if self.boundary == "periodic":
            dims += (self.tensors[-1].shape[2],)
        return dims

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    @property
    def dtype(self):
        return np.result_type(*self.tensors)

    def site_tensor(self, k: int) -> Tensor:
        return Tensor(self.tensors[k], SITE_LABELS)

    def parameter_count(self) -> int:
        """Number of stored complex amplitudes, ``sum_k d_k D_{k-1} D_k``."""
        return int(sum(t.size for t in self.tensors))

    def with_tensors(self, tensors, **kw) -> "MatrixProductState":
        kw.setdefault("gauge", "none")
        kw.setdefault("center", None)
        kw.setdefault("schmidt_weights", None)
        return replace(self, tensors=tuple(tensors), **kw)

    def to_open(self) -> "MatrixProductState":
        """Equivalent open-boundary chain (bond extent ``D**2`` for periodic input)."""
        if self.boundary == "open":
            return self
        n = self.n
        D0 = self.tensors[0].shape[0]
        if n == 1:
            t = np.einsum("aja->j", self.tensors[0])[None, :, None]
            return MatrixProductState((t,))
        out = []
        first = self.tensors[0]
        out.append(first.transpose(1, 0, 2).reshape(1, first.shape[1], -1))
        eye = np.eye(D0)
        for t in self.tensors[1:-1]:
            # (a0, b) x (a0', c) -> delta(a0, a0') t[b, j, c]
            big = np.einsum("xy,bjc->xbjyc", eye, t)
            out.append(big.reshape(D0 * t.shape[0], t.shape[1], D0 * t.shape[2]))
        last = self.tensors[-1]
        out.append(last.transpose(2, 0, 1).reshape(-1, last.shape[1], 1))
        return MatrixProductState(tuple(out))

    def norm(self) -> float:
        return float(np.sqrt(max(_inner(self, self).real, 0.0)))

    def normalized(self) -> "MatrixProductState":
        nrm = self.norm()
        if nrm == 0 or not np.isfinite(nrm):
            raise NormalizationError("state has zero norm")
        tensors = list(self.tensors)
        k = self.center if self.center is not None else 0
        tensors[k] = tensors[k] / nrm
        return replace(self, tensors=tuple(tensors))


# --------------------------------------------------------------------------
# Contractions used internally (the public versions live in ``expectation``)


def _inner(a: MatrixProductState, b: MatrixProductState) -> complex:
    """<a|b> by a left-to-right sweep."""
    a, b = a.to_open(), b.to_open()
    if a.phys_dims != b.phys_dims:
        raise DimensionError("states live on different chains")
    env = np.ones((1, 1), dtype=np.result_type(a.dtype, b.dtype))
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.tensordot(env, tb, axes=(1, 0))
        env = np.tensordot(ta.conj(), env, axes=([0, 1], [0, 1]))
    return complex(env[0, 0])


# --------------------------------------------------------------------------
# Constructors


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def open_bond_dims(phys_dims: Sequence[int], D: int) -> list[int]:
    """Largest useful bond extents up to ``D`` for an open chain."""
    n = len(phys_dims)
    dims = []
    for b in range(n - 1):
        left = int(np.prod(phys_dims[: b + 1], dtype=float))
        right = int(np.prod(phys_dims[b + 1 :], dtype=float))
        dims.append(int(min(D, left, right)))
    return dims


def random_mps(n: int, d: int | Sequence[int], D: int, seed=None, dtype=complex) -> MatrixProductState:
    """Random open MPS with Gaussian entries, right-canonicalized."""
    rng = _rng(seed)
    phys = [d] * n if np.isscalar(d) else list(d)
    bonds = [1] + open_bond_dims(phys, D) + [1]
    tensors = []
    for k in range(n):
        shape = (bonds[k], phys[k], bonds[k + 1])
        t = rng.standard_normal(shape)
        if np.issubdtype(np.dtype(dtype), np.complexfloating):
            t = t + 1j * rng.standard_normal(shape)
        tensors.append(t)
    return canonicalize(MatrixProductState(tuple(tensors)), "right")


def product_state(local_vectors: Sequence) -> MatrixProductState:
    tensors = []
    for v in local_vectors:
        v = np.asarray(v, dtype=complex)
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise NormalizationError("zero local vector")
        tensors.append((v / nrm)[None, :, None])
    return MatrixProductState(tuple(tensors), gauge="right", center=0,
                              schmidt_weights=tuple(np.ones(1) for _ in range(len(tensors) - 1)))


def basis_state(config: Sequence[int] | str, d: int = 2) -> MatrixProductState:
    """Product state ``|j_1 ... j_n>`` from a digit string or sequence."""
    config = [int(c) for c in config]
    return product_state([np.eye(d)[j] for j in config])


def from_dense(psi, phys_dims: Sequence[int], tol: float = 1e-14) -> MatrixProductState:
    """Successive Schmidt decomposition of a dense state vector.

    Returns a left-canonical open MPS; Schmidt values whose squared weight is
    below ``tol`` (relative, cumulative from the tail) are dropped.
    """
    psi = np.asarray(psi, dtype=complex).ravel()
    phys_dims = [int(d) for d in phys_dims]
    if psi.size != int(np.prod(phys_dims)):
        raise DimensionError(f"vector length {psi.size} does not match dims {phys_dims}")
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise NormalizationError("cannot decompose the zero vector")
    psi = psi / nrm
    tensors, weights = [], []
    rest = psi.reshape(1, -1)
    left = 1
    for d in phys_dims[:-1]:
        m = rest.reshape(left * d, -1)
        u, s, vh, _ = truncated_svd(m, tol=tol)
        tensors.append(u.reshape(left, d, len(s)))
        s = s / np.linalg.norm(s)
        weights.append(s**2)
        rest = s[:, None] * vh
        left = len(s)
    tensors.append(rest.reshape(left, phys_dims[-1], 1))
    return MatrixProductState(tuple(tensors), gauge="left", center=len(phys_dims) - 1,
                              schmidt_weights=tuple(weights))


def to_dense(mps: MatrixProductState, cap: int = DENSE_CAP) -> np.ndarray:
    """Full coefficient vector, index order ``j_1`` slowest."""
    size = int(np.prod(mps.phys_dims, dtype=float))
    if size > cap:
        raise SizeError(f"dense dimension {size} exceeds cap {cap}")
    if mps.boundary == "periodic":
        acc = mps.tensors[0]  # (a0, J, b)
        for t in mps.tensors[1:]:
            acc = np.tensordot(acc, t, axes=(2, 0))
            acc = acc.reshape(acc.shape[0], -1, acc.shape[-1])
        return np.einsum("aJa->J", acc)
    acc = mps.tensors[0].reshape(-1, mps.tensors[0].shape[2])
    for t in mps.tensors[1:]:
        acc = np.tensordot(acc, t, axes=(1, 0)).reshape(-1, t.shape[2])
    return acc.ravel()


# --------------------------------------------------------------------------
# Gauge and canonical forms


def apply_gauge(mps: MatrixProductState, bond: int, X, max_cond: float = 1e8) -> MatrixProductState:
    """Insert ``X X^{-1}`` on ``bond``: ``A_k -> A_k X`` and ``A_{k+1} -> X^{-1} A_{k+1}``.

    For periodic chains bond ``n - 1`` is the wrap bond.
    """
    X = np.asarray(X)
    n = mps.n
    nbonds = n - 1 if mps.boundary == "open" else n
    if not 0 <= bond < nbonds:
        raise DimensionError(f"bond {bond} out of range")
    k, k1 = bond, (bond + 1) % n
    D = mps.tensors[k].shape[2]
    if X.shape != (D, D):
        raise DimensionError(f"gauge matrix must be {D}x{D}")
    cond = np.linalg.cond(X)
    if not np.isfinite(cond) or cond > max_cond:
        raise GaugeError(f"gauge matrix condition number {cond:.3e} exceeds {max_cond:.1e}")
    Xinv = np.linalg.inv(X)
    tensors = list(mps.tensors)
    tensors[k] = np.tensordot(tensors[k], X, axes=(2, 0))
    tensors[k1] = np.tensordot(Xinv, tensors[k1], axes=(1, 0))
    return mps.with_tensors(tensors)


def _left_qr_sweep(tensors, stop):
    """Left-orthogonalize sites ``0 .. stop-1``; norm flows into site ``stop``."""
    for k in range(stop):
        t = tensors[k]
        dl, d, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl * d, dr))
        tensors[k] = q.reshape(dl, d, q.shape[1])
        tensors[k + 1] = np.tensordot(r, tensors[k + 1], axes=(1, 0))


def _right_qr_sweep(tensors, stop):
    """Right-orthogonalize sites ``n-1 .. stop+1``; norm flows into site ``stop``."""
    for k in range(len(tensors) - 1, stop, -1):
        t = tensors[k]
        dl, d, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl, d * dr).conj().T)
        tensors[k] = q.conj().T.reshape(q.shape[1], d, dr)
        tensors[k - 1] = np.tensordot(tensors[k - 1], r.conj().T, axes=(2, 0))


def _prune(s):
    return max(1, int(np.sum(s > _PRUNE * s[0]))) if s.size and s[0] > 0 else 1


def _normalize_site(tensors, k):
    nrm = np.linalg.norm(tensors[k])
    if nrm == 0 or not np.isfinite(nrm):
        raise NormalizationError("state has zero norm")
    tensors[k] = tensors[k] / nrm


def canonicalize(mps: MatrixProductState, target: str = "right", center: int | None = None) -> MatrixProductState:
    """Bring an open chain to left, right or mixed canonical form.

    The result is normalized, carries Schmidt weights on every bond, and
    numerically zero Schmidt values (below 1e-14 of the largest) are removed.

    Parameters
    ----------
    target : {"left", "right", "mixed"}
        ``"mixed"`` requires ``center``: sites left of it satisfy
        ``sum_j A_j^dag A_j = 1`` and sites right of it ``sum_j A_j A_j^dag = 1``.
    """
    if mps.boundary != "open":
        raise BoundaryError("canonical forms are only implemented for open boundaries")
    n = mps.n
    if target == "mixed":
        if center is None or not 0 <= center < n:
            raise ValueError("mixed canonical form needs a center site in range")
    elif target not in ("left", "right"):
        raise ValueError(f"unknown canonical target {target!r}")
    tensors = [np.asarray(t) for t in mps.tensors]
    weights = [None] * (n - 1)
    if target == "left":
        _right_qr_sweep(tensors, 0)
        for k in range(n - 1):
            t = tensors[k]
            dl, d, dr = t.shape
            u, s, vh = _svd(t.reshape(dl * d, dr))
            r = _prune(s)
            u, s, vh = u[:, :r], s[:r], vh[:r]
            tensors[k] = u.reshape(dl, d, r)
            tensors[k + 1] = np.tensordot(s[:, None] * vh, tensors[k + 1], axes=(1, 0))
            weights[k] = s**2 / np.sum(s**2)
        _normalize_site(tensors, n - 1)
        return mps.with_tensors(tensors, gauge="left", center=n - 1, schmidt_weights=tuple(weights))
    _left_qr_sweep(tensors, n - 1)
    for k in range(n - 1, 0, -1):
        t = tensors[k]
        dl, d, dr = t.shape
        u, s, vh = _svd(t.reshape(dl, d * dr))
        r = _prune(s)
        u, s, vh = u[:, :r], s[:r], vh[:r]
        tensors[k] = vh.reshape(r, d, dr)
        tensors[k - 1] = np.tensordot(tensors[k - 1], u * s, axes=(2, 0))
        weights[k - 1] = s**2 / np.sum(s**2)
    _normalize_site(tensors, 0)
    if target == "right":
        return mps.with_tensors(tensors, gauge="right", center=0, schmidt_weights=tuple(weights))
    _left_qr_sweep(tensors, center)
    return mps.with_tensors(tensors, gauge="mixed", center=center, schmidt_weights=tuple(weights))


def move_center(mps: MatrixProductState, center: int) -> MatrixProductState:
    """Shift the orthogonality center of a canonical open chain by QR steps."""
    if mps.gauge == "none" or mps.boundary != "open":
        return canonicalize(mps, "mixed", center)
    tensors = list(mps.tensors)
    cur = mps.center
    if center > cur:
        for k in range(cur, center):
            t = tensors[k]
            dl, d, dr = t.shape
            q, r = np.linalg.qr(t.reshape(dl * d, dr))
            tensors[k] = q.reshape(dl, d, q.shape[1])
            tensors[k + 1] = np.tensordot(r, tensors[k + 1], axes=(1, 0))
    else:
        for k in range(cur, center, -1):
            t = tensors[k]
            dl, d, dr = t.shape
            q, r = np.linalg.qr(t.reshape(dl, d * dr).conj().T)
            tensors[k] = q.conj().T.reshape(q.shape[1], d, dr)
            tensors[k - 1] = np.tensordot(tensors[k - 1], r.conj().T, axes=(2, 0))
    return mps.with_tensors(tensors, gauge="mixed", center=center, schmidt_weights=mps.schmidt_weights)


def is_left_isometry(t: np.ndarray, atol: float = 1e-10) -> bool:
    """``sum_j A_j^dag A_j == 1`` for a site tensor ``(left, phys, right)``."""
    m = t.reshape(-1, t.shape[2])
    return np.allclose(m.conj().T @ m, np.eye(t.shape[2]), atol=atol)


def is_right_isometry(t: np.ndarray, atol: float = 1e-10) -> bool:
    """``sum_j A_j A_j^dag == 1`` for a site tensor ``(left, phys, right)``."""
    m = t.reshape(t.shape[0], -1)
    return np.allclose(m @ m.conj().T, np.eye(t.shape[0]), atol=atol)


def compress(mps: MatrixProductState, max_bond: int, tol: float = 0.0):
    """SVD compression to bond dimension ``max_bond``.

    Returns ``(state, truncation_weight)``; the weight is the sum over cuts of
    discarded squared Schmidt weight and bounds the infidelity
    ``1 - |<psi|psi'>|**2``.
    """
    state = canonicalize(mps.to_open(), "right")
    tensors = list(state.tensors)
    n = state.n
    total = 0.0
    for k in range(n - 1):
        t = tensors[k]
        dl, d, dr = t.shape
        u, s, vh, discarded = truncated_svd(t.reshape(dl * d, dr), max_bond, tol)
        norm2 = np.sum(s**2) + discarded
        total += discarded / norm2
        s = s / np.sqrt(np.sum(s**2))
        tensors[k] = u.reshape(dl, d, len(s))
        tensors[k + 1] = np.tensordot(s[:, None] * vh, tensors[k + 1], axes=(1, 0))
    _normalize_site(tensors, n - 1)
    return state.with_tensors(tensors, gauge="left", center=n - 1), float(total)


# --------------------------------------------------------------------------
# Entanglement


@dataclass(frozen=True)
class EntanglementData:
    """Schmidt data across one cut; entropies in bits.

    ``cut = k`` separates the first ``k`` sites from the rest.
    """

    cut: int
    schmidt_values: np.ndarray

    @property
    def spectrum(self) -> np.ndarray:
        """Eigenvalues of the reduced density matrix (squared Schmidt values)."""
        return self.schmidt_values**2

    @property
    def entanglement_hamiltonian_levels(self) -> np.ndarray:
        """Levels of ``H_A`` with ``rho_A = exp(-H_A)`` (natural log)."""
        return -np.log(self.spectrum)

    def renyi(self, alpha: float) -> float:
        return entropy.renyi(self.spectrum, alpha)

    @property
    def von_neumann(self) -> float:
        return entropy.von_neumann(self.spectrum)


def entanglement_at_cut(mps: MatrixProductState, k: int) -> EntanglementData:
    """Schmidt values and entropies for the bipartition ``[0, k) | [k, n)``."""
    if mps.boundary != "open":
        raise BoundaryError("cut entanglement needs an open chain")
    if not 1 <= k <= mps.n - 1:
        raise ValueError(f"cut {k} outside 1..{mps.n - 1}")
    if mps.schmidt_weights is None:
        mps = canonicalize(mps, "right")
    lam = np.asarray(mps.schmidt_weights[k - 1], dtype=float)
    return EntanglementData(k, np.sqrt(lam))


def entanglement_scan(mps: MatrixProductState) -> list[EntanglementData]:
    if mps.schmidt_weights is None:
        mps = canonicalize(mps, "right")
    return [entanglement_at_cut(mps, k) for k in range(1, mps.n)]


def block_entropy_spectrum(mps: MatrixProductState, start: int, length: int) -> np.ndarray:
    """Eigenvalues of the reduced density matrix of sites ``start .. start+length-1``.

    The chain is brought to mixed canonical form centered at ``start``; the
    sites left and right of the block then carry orthonormal states, so the
    spectrum is that of the block tensor with both bonds traced out.
    """
    if mps.boundary != "open":
        raise BoundaryError("block entanglement needs an open chain")
    if length < 1 or start < 0 or start + length > mps.n:
        raise ValueError(f"block [{start}, {start + length}) outside the chain of {mps.n} sites")
    state = canonicalize(mps, "mixed", start)
    block = state.tensors[start]
    for k in range(start + 1, start + length):
        block = np.tensordot(block, state.tensors[k], axes=(block.ndim - 1, 0))
    Dl, Dr = block.shape[0], block.shape[-1]
    m = np.moveaxis(block, -1, 1).reshape(Dl * Dr, -1)  # (a b) x (s_1 .. s_l)
    gram = m.conj().T @ m if m.shape[1] <= m.shape[0] else m @ m.conj().T
    p = np.clip(np.linalg.eigvalsh(gram), 0.0, None)[::-1]
    return p / p.sum()


def write_entanglement_csv(path, scan: Sequence[EntanglementData]) -> None:
    """Columns ``cut,S0,S1,S2,Sinf,schmidt_1..schmidt_m``."""
    m = max((len(e.schmidt_values) for e in scan), default=0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cut", "S0", "S1", "S2", "Sinf"] + [f"schmidt_{i + 1}" for i in range(m)])
        for e in scan:
            vals = [f"{v:.17g}" for v in e.schmidt_values] + [""] * (m - len(e.schmidt_values))
            w.writerow([e.cut] + [f"{e.renyi(a):.17g}" for a in (0, 1, 2, np.inf)] + vals)


# --------------------------------------------------------------------------
# Injectivity


def injectivity_length(A, L_max: int, rtol: float = 1e-10) -> int | None:
    """Smallest block length at which ``X -> sum tr(X A_j1..A_jL)|j1..jL>`` has rank ``D**2``.

    ``A`` has axes ``(left, phys, right)`` with equal bond extents. Returns
    ``None`` when no ``L <= L_max`` is injective.
    """
    A = np.asarray(A)
    D = A.shape[0]
    if A.shape[2] != D:
        raise DimensionError("translation-invariant tensor needs square matrices")
    mats = [A[:, j, :] for j in range(A.shape[1])]
    block = np.eye(D)[None]  # products for all strings of the current length
    for L in range(1, L_max + 1):
        block = np.einsum("sab,jbc->sjac", block, np.stack(mats)).reshape(-1, D, D)
        # tr(X P) = sum_ab X_ab P_ba, so the map's matrix has rows vec(P^T).
        gamma = block.transpose(0, 2, 1).reshape(block.shape[0], D * D)
        s = np.linalg.svd(gamma, compute_uv=False)
        if s.size and s[0] > 0 and int(np.sum(s > rtol * s[0])) == D * D:
            return L
    return None


# --------------------------------------------------------------------------
# Fixtures

_SQ2 = np.sqrt(2.0)
AKLT_MATRICES = np.array([
    [[0.0, _SQ2], [0.0, 0.0]],   # m = +1
    [[1.0, 0.0], [0.0, -1.0]],   # m = 0
    [[0.0, 0.0], [-_SQ2, 0.0]],  # m = -1
])
"""AKLT site matrices in the spin-1 basis ordered ``(+1, 0, -1)``."""

GHZ_MATRICES = np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])


def uniform_tensor(matrices) -> np.ndarray:
    """Stack ``d`` matrices ``A_j`` into a site tensor ``(left, phys, right)``."""
    return np.asarray(matrices).transpose(1, 0, 2)


def _uniform_chain(mats, n, boundary, left=None, right=None) -> MatrixProductState:
    A = uniform_tensor(mats)
    if boundary == "periodic":
        state = MatrixProductState(tuple(A.copy() for _ in range(n)), boundary="periodic")
    else:
        D = A.shape[0]
        vl = np.eye(D)[0] if left is None else np.asarray(left)
        vr = np.eye(D)[0] if right is None else np.asarray(right)
        first = np.tensordot(vl, A, axes=(0, 0))[None]
        last = np.tensordot(A, vr, axes=(2, 0))[:, :, None]
        state = MatrixProductState((first,) + tuple(A.copy() for _ in range(n - 2)) + (last,))
    return state.normalized()


def build_fixture(name: str, n: int, boundary: str = "open", **kw) -> MatrixProductState:
    """Named analytic states.

    * ``ghz``: ``(|0..0> + |1..1>)/sqrt(2)`` from ``A_0 = |0><0|``, ``A_1 = |1><1|``.
    * ``cluster``: one-dimensional cluster state, stabilized by ``Z X Z``.
    * ``aklt``: the spin-1 valence-bond state; ``boundary="open"`` uses the
      boundary vectors ``left``/``right`` (default the first bond basis state).
    * ``product``: ``spec=`` digit string or list of local vectors.
    """
    if name == "product":
        spec = kw.get("spec", "0" * n)
        if isinstance(spec, str):
            state = basis_state(spec, kw.get("d", 2))
        else:
            state = product_state(spec)
        if n is not None and state.n != n:
            raise ModelError(f"product spec has {state.n} sites, expected {n}")
        return state
    if name == "ghz":
        if n < 2:
            raise ModelError("ghz needs n >= 2")
        if boundary == "periodic":
            return _uniform_chain(GHZ_MATRICES, n, "periodic")
        return _uniform_chain(GHZ_MATRICES, n, "open", left=np.ones(2), right=np.ones(2))
    if name == "cluster":
        if n < 3:
            raise ModelError("cluster needs n >= 3")
        A = np.zeros((2, 2, 2))
        for a, s in itertools.product(range(2), repeat=2):
            A[a, s, s] = (-1) ** (a * s)
        first = A[0:1] / _SQ2
        last = A.sum(axis=2, keepdims=True) / _SQ2
        mid = [A / _SQ2 for _ in range(n - 2)]
        state = MatrixProductState((first, *mid, last))
        return state.normalized()
    if name == "aklt":
        if n < 3:
            raise ModelError("aklt needs n >= 3")
        return _uniform_chain(AKLT_MATRICES, n, boundary, kw.get("left"), kw.get("right"))
    raise ModelError(f"unknown fixture {name!r}")


# --------------------------------------------------------------------------
# Persistence


def save_mps(path, mps: MatrixProductState, extra: dict | None = None) -> None:
    meta = {
        "kind": "mps",
        "boundary": mps.boundary,
        "gauge": mps.gauge,
        "center": mps.center,
        "phys_dims": list(mps.phys_dims),
        "bond_dims": list(mps.bond_dims),
        "schmidt_weights": None if mps.schmidt_weights is None
        else [list(map(float, w)) for w in mps.schmidt_weights],
    }
    if extra:
        meta["extra"] = extra
    save_tensors(path, [mps.site_tensor(k) for k in range(mps.n)], meta)


def load_mps(path) -> MatrixProductState:
    tensors, meta = load_tensors(path)
    if meta.get("kind") != "mps":
        raise ValueError(f"{path} does not hold an MPS")
    arrays = tuple(t.transpose(SITE_LABELS).data.copy() for t in tensors)
    weights = meta.get("schmidt_weights")
    return MatrixProductState(
        arrays,
        boundary=meta["boundary"],
        gauge=meta.get("gauge", "none"),
        center=meta.get("center"),
        schmidt_weights=None if weights is None else tuple(np.asarray(w) for w in weights),
    )
