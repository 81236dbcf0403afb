"""Dense labelled tensors, factorizations, eigensolvers and the TNET1 container.

Amplitudes are stored row-major over the declared label order: for labels
``(a, b, c)`` with dims ``(A, B, C)`` the flat offset of ``t[i, j, k]`` is
``(i * B + j) * C + k``. On disk every amplitude is a little-endian pair of
float64 values ``(re, im)``.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from .errors import (
    BipartitionError,
    ConvergenceError,
    DimensionError,
    LabelError,
    SymmetryError,
)

MAGIC = b"TNET1"
_BOM = 0x0102
DENSE_EIG_THRESHOLD = 64


class Tensor:
    """Immutable dense array whose axes are identified by string labels.

    Parameters
    ----------
    data : array_like
        Amplitudes; ``data.ndim`` must equal ``len(labels)``.
    labels : sequence of str
        Unique index names, one per axis.
    """

    __slots__ = ("_data", "_labels")

    def __init__(self, data, labels: Sequence[str]):
        arr = np.array(data, copy=True)
        if not np.iscomplexobj(arr) and not np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float64)
        labels = tuple(str(label) for label in labels)
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate labels in {labels}")
        if arr.ndim != len(labels):
            raise DimensionError(f"{len(labels)} labels for an array of order {arr.ndim}")
        if any(d < 1 for d in arr.shape):
            raise DimensionError(f"non-positive extent in {arr.shape}")
        arr.flags.writeable = False
        self._data = arr
        self._labels = labels

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    @property
    def dims(self) -> tuple[int, ...]:
        return self._data.shape

    @property
    def order(self) -> int:
        return len(self._labels)

    def dim(self, label: str) -> int:
        return self._data.shape[self.axis(label)]

    def axis(self, label: str) -> int:
        try:
            return self._labels.index(label)
        except ValueError:
            raise LabelError(f"unknown label {label!r}; tensor has {self._labels}") from None

    def transpose(self, labels: Sequence[str]) -> "Tensor":
        """Reorder axes to ``labels`` (a permutation of the current labels)."""
        if sorted(labels) != sorted(self._labels):
            raise LabelError(f"{tuple(labels)} is not a permutation of {self._labels}")
        perm = [self.axis(lab) for lab in labels]
        return Tensor(self._data.transpose(perm), labels)

    def relabel(self, mapping: dict[str, str]) -> "Tensor":
        return Tensor(self._data, [mapping.get(lab, lab) for lab in self._labels])

    def conj(self) -> "Tensor":
        return Tensor(self._data.conj(), self._labels)

    def matrix(self, row_labels: Sequence[str]) -> np.ndarray:
        """Group ``row_labels`` into rows and the remaining labels into columns."""
        row_labels = list(row_labels)
        col_labels = [lab for lab in self._labels if lab not in row_labels]
        t = self.transpose(row_labels + col_labels)
        nrow = int(np.prod([self.dim(lab) for lab in row_labels], dtype=np.int64))
        return t.data.reshape(nrow, -1)

    def norm(self) -> float:
        return float(np.linalg.norm(self._data))

    def __repr__(self):
        body = ", ".join(f"{lab}:{d}" for lab, d in zip(self._labels, self.dims))
        return f"Tensor({body})"


def contract(a: Tensor, b: Tensor, pairs: Iterable[tuple[str, str]]) -> Tensor:
    """Sum over each ``(label_in_a, label_in_b)`` pair.

    The result carries the free labels of ``a`` followed by those of ``b``.
    """
    pairs = list(pairs)
    ax_a, ax_b = [], []
    for la, lb in pairs:
        ia, ib = a.axis(la), b.axis(lb)
        if a.dims[ia] != b.dims[ib]:
            raise DimensionError(
                f"cannot pair {la!r} (extent {a.dims[ia]}) with {lb!r} (extent {b.dims[ib]})"
            )
        ax_a.append(ia)
        ax_b.append(ib)
    if len(set(ax_a)) != len(ax_a) or len(set(ax_b)) != len(ax_b):
        raise LabelError("a label appears in more than one pair")
    free_a = [lab for i, lab in enumerate(a.labels) if i not in ax_a]
    free_b = [lab for i, lab in enumerate(b.labels) if i not in ax_b]
    if set(free_a) & set(free_b):
        raise LabelError(f"free labels collide: {sorted(set(free_a) & set(free_b))}")
    data = np.tensordot(a.data, b.data, axes=(ax_a, ax_b))
    if not free_a and not free_b:
        return Tensor(np.asarray(data).reshape(()), ())
    return Tensor(data, free_a + free_b)


def trace(t: Tensor, label1: str, label2: str) -> Tensor:
    """Contract two indices of the same tensor."""
    i, j = t.axis(label1), t.axis(label2)
    if i == j:
        raise LabelError("trace needs two distinct labels")
    if t.dims[i] != t.dims[j]:
        raise DimensionError(f"cannot trace extents {t.dims[i]} and {t.dims[j]}")
    data = np.trace(t.data, axis1=i, axis2=j)
    rest = [lab for k, lab in enumerate(t.labels) if k not in (i, j)]
    return Tensor(np.asarray(data), rest)


# --------------------------------------------------------------------------
# Factorizations


@dataclass(frozen=True)
class SvdResult:
    left_isometry: Tensor
    singular_values: np.ndarray
    right_isometry: Tensor
    truncation_weight: float

    @property
    def rank(self) -> int:
        return len(self.singular_values)


def _svd(m: np.ndarray):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def truncation_rank(s: np.ndarray, max_rank: int | None = None, tol: float | None = None) -> int:
    """Number of singular values to keep.

    Smallest rank whose discarded squared weight (relative to the total) is at
    most ``tol``, then capped at ``max_rank``; never below one.
    """
    keep = len(s)
    if tol is not None and tol > 0 and keep > 1:
        w = s**2
        total = w.sum()
        if total > 0:
            # tail[k] = weight discarded when keeping k values
            tail = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
            keep = int(np.argmax(tail <= tol * total))
    if max_rank is not None:
        keep = min(keep, int(max_rank))
    return max(keep, 1)


def truncated_svd(m: np.ndarray, max_rank: int | None = None, tol: float | None = None):
    """SVD of a matrix truncated by :func:`truncation_rank`.

    Returns ``(u, s, vh, discarded)`` with ``discarded`` the absolute sum of
    squared dropped singular values.
    """
    u, s, vh = _svd(m)
    k = truncation_rank(s, max_rank, tol)
    discarded = float(np.sum(s[k:] ** 2))
    return u[:, :k], s[:k], vh[:k], discarded


def svd_split(
    t: Tensor,
    left_labels: Sequence[str],
    max_rank: int | None = None,
    tol: float | None = None,
    bond_label: str = "bond",
) -> SvdResult:
    """Factor ``t`` across the bipartition ``left_labels | rest``."""
    left_labels = list(left_labels)
    for lab in left_labels:
        t.axis(lab)
    right_labels = [lab for lab in t.labels if lab not in left_labels]
    if not left_labels or not right_labels:
        raise BipartitionError("left_labels must be a nonempty proper subset of the labels")
    if bond_label in t.labels:
        raise LabelError(f"bond label {bond_label!r} already used")
    u, s, vh, discarded = truncated_svd(t.matrix(left_labels), max_rank, tol)
    left_dims = [t.dim(lab) for lab in left_labels]
    right_dims = [t.dim(lab) for lab in right_labels]
    left = Tensor(u.reshape(*left_dims, len(s)), left_labels + [bond_label])
    right = Tensor(vh.reshape(len(s), *right_dims), [bond_label] + right_labels)
    return SvdResult(left, s, right, discarded)


# --------------------------------------------------------------------------
# Eigensolvers


def _as_matrix(h, row_labels=None):
    if isinstance(h, Tensor):
        if row_labels is None:
            if h.order % 2:
                raise DimensionError("odd-order tensor needs explicit row_labels")
            row_labels = h.labels[: h.order // 2]
        return h.matrix(row_labels)
    return h


def lowest_eigpair(apply, dim: int, dtype, guess=None, tol: float = 1e-10, maxiter=None, dense=None):
    """Lowest eigenpair of a Hermitian map given by ``apply`` (no exceptions).

    Uses Lanczos (ARPACK) above :data:`DENSE_EIG_THRESHOLD`, exact dense
    diagonalization below it. Returns ``(value, vector, residual)``.
    """
    dtype = np.result_type(dtype, np.float64)
    if dense is not None or dim <= DENSE_EIG_THRESHOLD:
        if dense is None:
            dense = np.empty((dim, dim), dtype=dtype)
            eye = np.eye(dim, dtype=dtype)
            for k in range(dim):
                dense[:, k] = apply(eye[:, k])
        dense = 0.5 * (dense + dense.conj().T)
        w, v = np.linalg.eigh(dense)
        vec = v[:, 0]
        return float(w[0]), vec, float(np.linalg.norm(dense @ vec - w[0] * vec))
    op = spla.LinearOperator((dim, dim), matvec=apply, dtype=dtype)
    v0 = None
    if guess is not None:
        v0 = np.asarray(guess, dtype=dtype).ravel()
        if not np.any(v0):
            v0 = None
    try:
        w, v = spla.eigsh(op, k=1, which="SA", v0=v0, tol=tol * 0.1, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        if len(exc.eigenvalues) == 0:
            return float("nan"), v0 if v0 is not None else np.zeros(dim, dtype), float("inf")
        w, v = exc.eigenvalues, exc.eigenvectors
    vec = v[:, 0]
    vec = vec / np.linalg.norm(vec)
    value = float(np.real(np.vdot(vec, apply(vec))))
    return value, vec, float(np.linalg.norm(apply(vec) - value * vec))


def eig_lowest(h, guess=None, tol: float = 1e-10, row_labels=None, maxiter: int | None = None):
    """Minimal eigenvalue and unit eigenvector of a Hermitian matrix.

    ``h`` may be a :class:`Tensor` (rows are ``row_labels``, default the first
    half of its labels), a dense array, or a scipy ``LinearOperator``.
    The residual ``||h v - E v||`` is checked against ``tol * max(1, |E|)``.

    Raises
    ------
    SymmetryError
        If a dense ``h`` is not Hermitian to ``tol``.
    ConvergenceError
        If the Krylov iteration does not reach the residual target.
    """
    m = _as_matrix(h, row_labels)
    if isinstance(m, spla.LinearOperator):
        dim = m.shape[0]
        return _checked(lambda x: m.matvec(x), dim, m.dtype, guess, tol, maxiter, None)
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if np.abs(m - m.conj().T).max(initial=0.0) > tol * scale:
        raise SymmetryError("matrix is not Hermitian within tolerance")
    dense = m if m.shape[0] <= DENSE_EIG_THRESHOLD else None
    return _checked(lambda x: m @ x, m.shape[0], m.dtype, guess, tol, maxiter, dense)


def _checked(apply, dim, dtype, guess, tol, maxiter, dense):
    value, vec, res = lowest_eigpair(apply, dim, dtype, guess, tol, maxiter, dense)
    if not res <= tol * max(1.0, abs(value)):
        raise ConvergenceError(f"Lanczos residual {res:.3e} above tolerance {tol:.1e}", residual=res)
    return value, vec


@dataclass(frozen=True)
class GeneralSpectrum:
    """Full spectrum of a square matrix, sorted by non-increasing modulus.

    ``right[:, j]`` and ``left[j, :]`` form biorthogonal pairs
    (``left @ right == I``) for non-defective input. When ``defective`` is set,
    pairs belonging to defective blocks are NaN.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    defective: bool


def _spectral_order(w):
    return np.lexsort((-w.imag.round(12), -w.real.round(12), -np.abs(w).round(12)))


def eig_general(m, row_labels=None, cond_limit: float = 1e10) -> GeneralSpectrum:
    """Eigenvalues with left and right eigenvectors of a general square matrix."""
    m = np.asarray(_as_matrix(m, row_labels))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    w, vl, vr = scipy.linalg.eig(m, left=True, right=True)
    order = _spectral_order(w)
    w, vl, vr = w[order], vl[:, order], vr[:, order]
    vr = vr / np.linalg.norm(vr, axis=0)
    if np.linalg.cond(vr) < cond_limit:
        return GeneralSpectrum(w, vr, np.linalg.inv(vr), False)
    # Defective: keep only well-separated eigenvalues with scipy's left vectors.
    left = np.full((len(w), len(w)), np.nan, dtype=complex)
    right = np.full_like(left, np.nan)
    gap = np.abs(w[:, None] - w[None, :]) + np.eye(len(w))
    for j in np.flatnonzero(gap.min(axis=1) > 1e-6):
        lj = vl[:, j].conj()
        overlap = lj @ vr[:, j]
        if abs(overlap) > 1e-12:
            left[j] = lj / overlap
            right[:, j] = vr[:, j]
    return GeneralSpectrum(w, right, left, True)


# --------------------------------------------------------------------------
# TNET1 container


def write_tnet(stream, tensors: Sequence[Tensor], meta: dict | None = None) -> None:
    """Serialize tensors as one TNET1 record.

    Layout: magic ``TNET1``, uint16 byte-order mark ``0x0102`` (little
    endian), uint32 header length, UTF-8 JSON header, then for each tensor its
    amplitudes as interleaved little-endian float64 ``(re, im)`` pairs.
    """
    header = {
        "byteorder": "little",
        "layout": "row-major",
        "tensors": [{"labels": list(t.labels), "dims": list(t.dims)} for t in tensors],
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    stream.write(MAGIC)
    stream.write(struct.pack("<HI", _BOM, len(blob)))
    stream.write(blob)
    for t in tensors:
        stream.write(np.ascontiguousarray(t.data, dtype="<c16").tobytes())


def read_tnet(stream) -> tuple[list[Tensor], dict]:
    magic = stream.read(len(MAGIC))
    if magic != MAGIC:
        raise ValueError(f"not a TNET1 stream (magic {magic!r})")
    bom, size = struct.unpack("<HI", stream.read(6))
    if bom != _BOM:
        raise ValueError("byte-order marker mismatch")
    header = json.loads(stream.read(size).decode("utf-8"))
    tensors = []
    for entry in header["tensors"]:
        dims = tuple(entry["dims"])
        count = int(np.prod(dims, dtype=np.int64))
        raw = stream.read(16 * count)
        if len(raw) != 16 * count:
            raise ValueError("truncated TNET1 data block")
        data = np.frombuffer(raw, dtype="<c16").astype(np.complex128).reshape(dims)
        tensors.append(Tensor(data, entry["labels"]))
    return tensors, header.get("meta", {})


def save_tensors(path, tensors: Sequence[Tensor], meta: dict | None = None) -> None:
    with open(path, "wb") as fh:
        write_tnet(fh, tensors, meta)


def load_tensors(path) -> tuple[list[Tensor], dict]:
    with open(path, "rb") as fh:
        return read_tnet(fh)


def save_tensor(path, t: Tensor) -> None:
    save_tensors(path, [t])


def load_tensor(path) -> Tensor:
    tensors, _ = load_tensors(path)
    if len(tensors) != 1:
        raise ValueError(f"{path} holds {len(tensors)} tensors")
    return tensors[0]


def tnet_bytes(tensors: Sequence[Tensor], meta: dict | None = None) -> bytes:
    buf = io.BytesIO()
    write_tnet(buf, tensors, meta)
    return buf.getvalue()


__all__ = [
    "Tensor",
    "SvdResult",
    "GeneralSpectrum",
    "contract",
    "trace",
    "svd_split",
    "truncated_svd",
    "truncation_rank",
    "eig_lowest",
    "eig_general",
    "lowest_eigpair",
    "save_tensor",
    "load_tensor",
    "save_tensors",
    "load_tensors",
    "write_tnet",
    "read_tnet",
]
