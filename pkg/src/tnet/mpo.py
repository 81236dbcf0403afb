"""Model specifications, matrix product operators and their application.

MPO site tensors have axes ``(left, right, out, in)``. Every MPO is stored in
open form (outer bonds of extent one); periodic Hamiltonians carry their
wrap-around terms through dedicated bond channels instead of a trace.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DimensionError, ModelError, SizeError
from .mps import MatrixProductState

KINDS = ("xy", "heisenberg_spin1", "aklt", "majumdar_ghosh", "custom")
MPO_LABELS = ("left", "right", "out", "in")

# Pauli matrices; ``iY`` keeps XY-type couplings real (Y (x) Y = -(iY) (x) (iY)).
PAULI = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Y": np.array([[0.0, -1j], [1j, 0.0]]),
    "iY": np.array([[0.0, 1.0], [-1.0, 0.0]]),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]]),
    "sp": np.array([[0.0, 1.0], [0.0, 0.0]]),
    "sm": np.array([[0.0, 0.0], [1.0, 0.0]]),
}


def spin1_operators() -> dict[str, np.ndarray]:
    """Spin-1 matrices in the ``S^z`` eigenbasis ordered ``(+1, 0, -1)``."""
    s2 = np.sqrt(2.0)
    sp = np.array([[0.0, s2, 0.0], [0.0, 0.0, s2], [0.0, 0.0, 0.0]])
    sm = sp.T.copy()
    return {
        "I": np.eye(3),
        "Sz": np.diag([1.0, 0.0, -1.0]),
        "S+": sp,
        "S-": sm,
        "Sx": (sp + sm) / 2,
        "Sy": (sp - sm) / 2j,
    }


@dataclass(frozen=True)
class ModelSpec:
    """Symbolic description of a spin-chain Hamiltonian.

    ``gamma`` is the XY anisotropy, ``lam`` the magnetic field, ``J`` the
    spin-1 Heisenberg exchange. ``custom`` models list explicit local terms
    ``{"sites": [i, i+1, ...], "op": matrix}`` acting on consecutive sites
    with local dimension ``d``.
    """

    kind: str
    n: int
    boundary: str = "open"
    gamma: float = 0.0
    lam: float = 0.0
    J: float = 1.0
    d: int | None = None
    terms: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")
        if self.boundary not in ("open", "periodic"):
            raise ModelError(f"unknown boundary {self.boundary!r}")
        min_n = 3 if (self.kind == "majumdar_ghosh" or self.boundary == "periodic") else 2
        if int(self.n) != self.n or self.n < min_n:
            raise ModelError(f"{self.kind} with {self.boundary} boundary needs n >= {min_n}")
        for name in ("gamma", "lam", "J"):
            if not np.isfinite(getattr(self, name)):
                raise ModelError(f"coupling {name} must be finite")
        if self.kind == "custom":
            if not self.d or self.d < 1:
                raise ModelError("custom models need a local dimension d")
            for t in self.terms:
                sites = list(t["sites"])
                if sites != list(range(sites[0], sites[0] + len(sites))):
                    raise ModelError("custom term sites must be consecutive")
                if sites[0] < 0 or sites[-1] >= self.n:
                    raise ModelError("custom term outside the chain")
                op = np.asarray(t["op"])
                if op.shape != (self.d ** len(sites),) * 2:
                    raise ModelError("custom term operator has the wrong shape")

    @property
    def local_dim(self) -> int:
        if self.kind in ("xy", "majumdar_ghosh"):
            return 2
        if self.kind in ("heisenberg_spin1", "aklt"):
            return 3
        return int(self.d)

    @property
    def nearest_neighbor(self) -> bool:
        if self.kind == "majumdar_ghosh":
            return False
        if self.kind == "custom":
            return all(len(t["sites"]) <= 2 for t in self.terms)
        return True

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "n": int(self.n),
            "boundary": self.boundary,
            "couplings": {"gamma": self.gamma, "lambda": self.lam, "J": self.J},
        }
        if self.kind == "custom":
            out["d"] = self.d
            out["terms"] = [
                {"sites": list(t["sites"]), "op": _encode_matrix(np.asarray(t["op"]))}
                for t in self.terms
            ]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        c = data.get("couplings", {}) or {}
        terms = tuple(
            {"sites": tuple(t["sites"]), "op": _decode_matrix(t["op"])} for t in data.get("terms", [])
        )
        return cls(
            kind=data["kind"],
            n=int(data["n"]),
            boundary=data.get("boundary", "open"),
            gamma=float(c.get("gamma", 0.0)),
            lam=float(c.get("lambda", 0.0)),
            J=float(c.get("J", 1.0)),
            d=data.get("d"),
            terms=terms,
        )

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))


def _encode_matrix(m: np.ndarray):
    m = np.asarray(m)
    if np.iscomplexobj(m) and np.any(m.imag):
        return {"re": m.real.tolist(), "im": m.imag.tolist()}
    return m.real.tolist()


def _decode_matrix(obj) -> np.ndarray:
    if isinstance(obj, dict):
        return np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj.get("im", 0.0), dtype=float)
    return np.asarray(obj)


# --------------------------------------------------------------------------
# Symbolic terms: (coefficient, {site: operator name})


def _pairs(n, boundary, distance):
    if boundary == "open":
        return [(j, j + distance) for j in range(n - distance)]
    return [(j, (j + distance) % n) for j in range(n)]


def model_terms(spec: ModelSpec):
    """Operator table and list of product terms ``(coef, {site: name})``."""
    n, terms = spec.n, []
    if spec.kind == "xy":
        ops = dict(PAULI)
        cx = -(1 + spec.gamma) / 8
        cy = (1 - spec.gamma) / 8  # -(1-gamma)/8 * Y Y == +(1-gamma)/8 * iY iY
        for j, k in _pairs(n, spec.boundary, 1):
            terms.append((cx, {j: "X", k: "X"}))
            terms.append((cy, {j: "iY", k: "iY"}))
        if spec.lam != 0:
            for j in range(n):
                terms.append((-spec.lam / 2, {j: "Z"}))
        return ops, terms
    if spec.kind in ("heisenberg_spin1", "aklt"):
        ops = spin1_operators()
        dot = [("Sz", "Sz", 1.0), ("S+", "S-", 0.5), ("S-", "S+", 0.5)]
        if spec.kind == "heisenberg_spin1":
            for j, k in _pairs(n, spec.boundary, 1):
                for a, b, c in dot:
                    terms.append((spec.J * c, {j: a, k: b}))
            return ops, terms
        for a, b, _ in dot:
            for a2, b2, _ in dot:
                ops[f"{a}{a2}"] = ops[a] @ ops[a2]
                ops[f"{b}{b2}"] = ops[b] @ ops[b2]
        for j, k in _pairs(n, spec.boundary, 1):
            for a, b, c in dot:
                terms.append((0.5 * c, {j: a, k: b}))
            for a, b, c in dot:
                for a2, b2, c2 in dot:
                    terms.append((c * c2 / 6, {j: f"{a}{a2}", k: f"{b}{b2}"}))
            terms.append((1.0 / 3.0, {j: "I"}))
        return ops, terms
    if spec.kind == "majumdar_ghosh":
        ops = dict(PAULI)
        dot = [("Z", "Z", 1.0), ("sp", "sm", 2.0), ("sm", "sp", 2.0)]
        for dist, weight in ((1, 2.0), (2, 1.0)):
            for j, k in _pairs(n, spec.boundary, dist):
                for a, b, c in dot:
                    terms.append((weight * c, {j: a, k: b}))
        return ops, terms
    # custom: operator-Schmidt decomposition of every local term
    ops = {"I": np.eye(spec.d)}
    for idx, t in enumerate(spec.terms):
        sites = list(t["sites"])
        for coef, factors in _operator_schmidt(np.asarray(t["op"]), spec.d, len(sites)):
            names = {}
            for pos, (site, f) in enumerate(zip(sites, factors)):
                name = f"t{idx}_{len(terms)}_{pos}"
                ops[name] = f
                names[site] = name
            terms.append((coef, names))
    return ops, terms


def _operator_schmidt(op, d, nsites, rtol=1e-13):
    """Decompose a ``nsites``-local operator into a sum of product operators."""
    if nsites == 1:
        return [(1.0, [op])]
    t = op.reshape((d,) * (2 * nsites))
    # group (out_1, in_1) | rest
    perm = [0, nsites] + [i for i in range(1, nsites)] + [nsites + i for i in range(1, nsites)]
    m = t.transpose(perm).reshape(d * d, -1)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    out = []
    for r in range(len(s)):
        if s[r] <= rtol * max(s[0], 1e-300):
            break
        first = u[:, r].reshape(d, d)
        rest = vh[r].reshape((d,) * (2 * (nsites - 1)))
        rest = rest.reshape(d ** (nsites - 1), d ** (nsites - 1))
        for coef, factors in _operator_schmidt(rest, d, nsites - 1, rtol):
            out.append((s[r] * coef, [first] + factors))
    return out


# --------------------------------------------------------------------------
# MPO type and construction


@dataclass(frozen=True, eq=False)
class MatrixProductOperator:
    tensors: tuple
    boundary: str = "open"
    hermitian: bool = True

    def __post_init__(self):
        tensors = tuple(np.asarray(t) for t in self.tensors)
        object.__setattr__(self, "tensors", tensors)
        for k, t in enumerate(tensors):
            if t.ndim != 4:
                raise DimensionError(f"MPO site {k} has order {t.ndim}, expected 4")
        for k in range(len(tensors) - 1):
            if tensors[k].shape[1] != tensors[k + 1].shape[0]:
                raise DimensionError(f"MPO bond {k} extents do not match")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[1] != 1:
            raise DimensionError("MPO end tensors need outer bonds of extent 1")

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def phys_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[3] for t in self.tensors)

    @property
    def op_bond_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[1] for t in self.tensors[:-1])

    @property
    def dtype(self):
        return np.result_type(*self.tensors)

    def to_dense(self, cap: int = 2**12) -> np.ndarray:
        size = int(np.prod(self.phys_dims, dtype=float))
        if size > cap:
            raise SizeError(f"dense operator dimension {size} exceeds cap {cap}")
        acc = self.tensors[0][0]  # (w, out, in)
        for t in self.tensors[1:]:
            # acc (w, O, I), t (w, v, o, i) -> (v, O o, I i)
            acc = np.einsum("wOI,wvoi->vOoIi", acc, t)
            acc = acc.reshape(acc.shape[0], acc.shape[1] * acc.shape[2], acc.shape[3] * acc.shape[4])
        return acc[0]


def mpo_from_terms(n: int, ops: dict, terms, boundary: str = "open") -> MatrixProductOperator:
    """Finite-state-automaton MPO for a sum of product terms.

    Every bond carries a ``start`` channel (nothing placed yet), a ``done``
    channel (a term is complete) and one channel per distinct operator
    prefix of the terms that straddle it, so terms sharing a prefix share a
    channel (this is how next-nearest-neighbor couplings reuse the
    nearest-neighbor channels).
    """
    d = next(iter(ops.values())).shape[0]
    dtype = np.result_type(*ops.values(), *[c for c, _ in terms], np.float64)
    strings = []
    for coef, placed in terms:
        sites = sorted(placed)
        s0, s1 = sites[0], sites[-1]
        names = tuple(placed.get(s, "I") for s in range(s0, s1 + 1))
        strings.append((coef, s0, names))
    channels = []
    for b in range(n - 1):
        keys = {}
        for _, s0, names in strings:
            if s0 <= b < s0 + len(names) - 1:
                keys.setdefault(names[: b - s0 + 1], None)
        channels.append(["start"] + list(keys) + ["done"])
    index = [{c: i for i, c in enumerate(ch)} for ch in channels]
    left_edge, right_edge = {"start": 0}, {"done": 0}
    eye = np.eye(d)
    tensors = []
    for k in range(n):
        lidx = left_edge if k == 0 else index[k - 1]
        ridx = right_edge if k == n - 1 else index[k]
        W = np.zeros((len(lidx), len(ridx), d, d), dtype=dtype)
        if "start" in ridx:
            W[lidx["start"], ridx["start"]] = eye
        if "done" in lidx:
            W[lidx["done"], ridx["done"]] = eye
        for coef, s0, names in strings:
            last = s0 + len(names) - 1
            if not s0 <= k <= last:
                continue
            op = ops[names[k - s0]]
            src = lidx["start"] if k == s0 else lidx[names[: k - s0]]
            if k == last:
                W[src, ridx["done"]] += coef * op
            else:
                W[src, ridx[names[: k - s0 + 1]]] = op
        tensors.append(W)
    if all(not np.any(W.imag) for W in tensors):
        tensors = [W.real.copy() for W in tensors]
    return MatrixProductOperator(tuple(tensors), boundary=boundary, hermitian=True)


def build_mpo(spec: ModelSpec) -> MatrixProductOperator:
    ops, terms = model_terms(spec)
    mpo = mpo_from_terms(spec.n, ops, terms, spec.boundary)
    if spec.kind == "custom":
        herm = all(np.allclose(np.asarray(t["op"]), np.asarray(t["op"]).conj().T) for t in spec.terms)
        mpo = replace(mpo, hermitian=herm)
    return mpo


def identity_mpo(phys_dims: Sequence[int]) -> MatrixProductOperator:
    return MatrixProductOperator(tuple(np.eye(d)[None, None] for d in phys_dims))


def site_sum_mpo(op, n: int) -> MatrixProductOperator:
    """MPO of ``sum_j op_j`` for a single-site operator."""
    op = np.asarray(op)
    return mpo_from_terms(n, {"I": np.eye(op.shape[0]), "o": op}, [(1.0, {j: "o"}) for j in range(n)])


def bond_terms(spec: ModelSpec) -> list[np.ndarray]:
    """Dense two-site terms ``h_{j,j+1}`` (``d^2 x d^2``) summing to ``H``.

    On-site terms are split between the adjacent bonds (interior sites half
    each, end sites entirely to their single bond).
    """
    if not spec.nearest_neighbor:
        raise ModelError(f"{spec.kind} has interactions beyond nearest neighbors")
    if spec.boundary != "open":
        raise ModelError("bond decomposition is only defined for open chains")
    ops, terms = model_terms(spec)
    n, d = spec.n, spec.local_dim
    eye = np.eye(d)
    dtype = np.result_type(*ops.values(), np.float64)
    out = [np.zeros((d * d, d * d), dtype=dtype) for _ in range(n - 1)]
    for coef, placed in terms:
        sites = sorted(placed)
        if len(sites) == 2:
            j = sites[0]
            out[j] = out[j] + coef * np.kron(ops[placed[j]], ops[placed[j + 1]])
            continue
        j = sites[0]
        op = coef * ops[placed[j]]
        shares = []
        if j > 0:
            shares.append((j - 1, np.kron(eye, op)))
        if j < n - 1:
            shares.append((j, np.kron(op, eye)))
        for b, m in shares:
            out[b] = out[b] + m / len(shares)
    return out


# --------------------------------------------------------------------------
# Application and expectation values


def _check_shapes(op: MatrixProductOperator, mps: MatrixProductState):
    if op.n != mps.n or op.phys_dims != mps.phys_dims:
        raise DimensionError("operator and state live on different chains")


def apply_mpo(op: MatrixProductOperator, mps: MatrixProductState) -> MatrixProductState:
    """``O|psi>`` as an uncompressed MPS (bond extent ``D * w``)."""
    _check_shapes(op, mps)
    state = mps.to_open()
    tensors = []
    for W, A in zip(op.tensors, state.tensors):
        t = np.einsum("wvst,atb->awsbv", W, A)
        a, w, s, b, v = t.shape
        tensors.append(t.reshape(a * w, s, b * v))
    return MatrixProductState(tuple(tensors))


def left_env_step(L, A, W, B=None):
    """Extend a left environment ``L[bra, w, ket]`` by one site.

    ``A`` is the ket tensor, ``B`` the bra tensor (default ``A``).
    """
    B = A if B is None else B
    t = np.tensordot(L, A, axes=(2, 0))                      # bra, w, s, ket
    t = np.tensordot(t, W, axes=([1, 2], [0, 3]))            # bra, ket, w', o
    t = np.tensordot(B.conj(), t, axes=([0, 1], [0, 3]))     # bra', ket, w'
    return t.transpose(0, 2, 1)


def right_env_step(R, A, W, B=None):
    """Extend a right environment ``R[bra, w, ket]`` by one site to the left."""
    B = A if B is None else B
    t = np.tensordot(A, R, axes=(2, 2))                      # ket, s, bra', w'
    t = np.tensordot(W, t, axes=([1, 3], [3, 1]))            # w, o, ket, bra'
    return np.tensordot(B.conj(), t, axes=([1, 2], [1, 3]))  # bra, w, ket


def expectation_mpo(mps: MatrixProductState, op: MatrixProductOperator, bra: MatrixProductState | None = None) -> complex:
    """``<psi|O|psi>`` by one left-to-right environment sweep (``<bra|O|psi>`` if given)."""
    _check_shapes(op, mps)
    ket = mps.to_open()
    bra = ket if bra is None else bra.to_open()
    L = np.ones((1, 1, 1), dtype=np.result_type(ket.dtype, bra.dtype, op.dtype))
    for A, W, B in zip(ket.tensors, op.tensors, bra.tensors):
        L = left_env_step(L, A, W, B)
    return complex(L[0, 0, 0])


def dense_operator_string(ops: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1))
    for o in ops:
        out = np.kron(out, o)
    return out


def save_model(path, spec: ModelSpec) -> None:
    with open(path, "w") as fh:
        fh.write(spec.to_json())


def load_model(path) -> ModelSpec:
    with open(path) as fh:
        return ModelSpec.from_json(fh.read())


__all__ = [
    "ModelSpec",
    "MatrixProductOperator",
    "PAULI",
    "spin1_operators",
    "model_terms",
    "mpo_from_terms",
    "build_mpo",
    "identity_mpo",
    "site_sum_mpo",
    "bond_terms",
    "apply_mpo",
    "expectation_mpo",
    "save_model",
    "load_model",
    "left_env_step",
    "right_env_step",
]
