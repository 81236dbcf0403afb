"""Translation-invariant MPS: transfer operator, spectrum and correlations.

For a uniform site tensor the transfer operator ``E = sum_j A_j (x) conj(A_j)``
controls every correlation function. After rescaling ``A`` so the leading
eigenvalue is one, ``E^k = |r_1><l_1| + sum_{j>1} lambda_j^k |r_j><l_j|``
and connected correlators decay as ``|lambda_2|^dist``, which defines the
correlation length ``xi = -1 / ln|lambda_2|``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrumError, DimensionError, NormalizationError
from .expectation import transfer_matrix
from .tensor import eig_general

DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class UniformMps:
    """Site tensor ``A[alpha, j, beta]`` repeated on every site.

    Use :meth:`normalized` to rescale so the spectral radius of the
    transfer operator is one.
    """

    tensor: np.ndarray
    normalized_flag: bool = False

    def __post_init__(self):
        A = np.asarray(self.tensor)
        object.__setattr__(self, "tensor", A)
        if A.ndim != 3 or A.shape[0] != A.shape[2]:
            raise DimensionError("uniform tensor must have shape (D, d, D)")
        if not np.any(A):
            raise NormalizationError("zero site tensor")

    @classmethod
    def from_matrices(cls, matrices) -> "UniformMps":
        """Build from ``d`` matrices ``A_j`` of extent ``D x D``."""
        return cls(np.asarray(matrices).transpose(1, 0, 2))

    @property
    def bond_dim(self) -> int:
        return self.tensor.shape[0]

    @property
    def phys_dim(self) -> int:
        return self.tensor.shape[1]

    def normalized(self) -> "UniformMps":
        if self.normalized_flag:
            return self
        w = eig_general(transfer_matrix(self.tensor)).eigenvalues
        lam = abs(w[0])
        if lam == 0:
            raise NormalizationError("transfer operator is nilpotent")
        return UniformMps(self.tensor / np.sqrt(lam), True)


def transfer_operator(u: UniformMps, rescale: bool = True) -> np.ndarray:
    """``D^2 x D^2`` matrix of ``sum_j A_j (x) conj(A_j)``."""
    if rescale:
        u = u.normalized()
    return transfer_matrix(u.tensor)


def observable_transfer(u: UniformMps, op, rescale: bool = True) -> np.ndarray:
    """``E_O = sum_{j,k} <k|O|j> A_j (x) conj(A_k)``."""
    if rescale:
        u = u.normalized()
    op = np.asarray(op)
    if op.shape != (u.phys_dim, u.phys_dim):
        raise DimensionError(f"observable must be {u.phys_dim}x{u.phys_dim}")
    return transfer_matrix(u.tensor, op)


@dataclass(frozen=True)
class TransferSpectrum:
    """Eigen-decomposition of the transfer operator by non-increasing modulus.

    ``right[:, j]`` and ``left[j]`` are normalized so ``left[j] @ right[:, j] == 1``.
    ``degenerate`` is set when more than one eigenvalue has the leading modulus.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    degenerate: bool
    defective: bool

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "re", "im", "modulus"])
            for i, lam in enumerate(self.eigenvalues):
                w.writerow([i + 1, f"{lam.real:.17g}", f"{lam.imag:.17g}", f"{abs(lam):.17g}"])


def transfer_spectrum(u: UniformMps, rescale: bool = True) -> TransferSpectrum:
    spec = eig_general(transfer_operator(u, rescale))
    w = spec.eigenvalues
    mods = np.abs(w)
    degenerate = len(w) > 1 and mods[1] >= mods[0] * (1 - DEGENERACY_RTOL)
    return TransferSpectrum(w, spec.right, spec.left, bool(degenerate), spec.defective)


def _require_unique(spec: TransferSpectrum):
    if spec.degenerate:
        raise DegenerateSpectrumError(
            "leading transfer eigenvalue is degenerate in modulus: correlation functions "
            "acquire constant contributions and no finite correlation length exists "
            f"(|lambda_1| = {abs(spec.eigenvalues[0]):.12g}, |lambda_2| = {abs(spec.eigenvalues[1]):.12g})"
        )


def correlation_length(u: UniformMps) -> float:
    """``xi = -1 / ln|lambda_2|`` of the rescaled transfer operator (0 for ``D^2 = 1``)."""
    spec = transfer_spectrum(u)
    if len(spec.eigenvalues) == 1:
        return 0.0
    _require_unique(spec)
    lam2 = abs(spec.eigenvalues[1])
    if lam2 == 0:
        return 0.0
    return float(-1.0 / np.log(lam2))


def _fixed_points(spec: TransferSpectrum):
    r1, l1 = spec.right[:, 0], spec.left[0]
    if not (np.all(np.isfinite(r1)) and np.all(np.isfinite(l1))):
        raise DegenerateSpectrumError("leading eigenvector pair is not well defined")
    return l1, r1


def local_mean(u: UniformMps, op) -> complex:
    """Bulk single-site expectation ``<l_1|E_O|r_1>``."""
    u = u.normalized()
    spec = transfer_spectrum(u)
    _require_unique(spec)
    l1, r1 = _fixed_points(spec)
    return complex(l1 @ observable_transfer(u, op) @ r1)


def asymptotic_correlator(u: UniformMps, op_a, op_b, dist: int, connected: bool = False) -> complex:
    """Bulk ``<O_A O_B>`` at separation ``dist`` via the spectral expansion.

    ``<l_1| E_A E^{dist-1} E_B |r_1>`` with ``E^{dist-1}`` expanded as
    ``sum_j lambda_j^{dist-1} |r_j><l_j|``; ``connected=True`` drops the
    ``j = 1`` term, which equals ``<O_A><O_B>``.
    """
    if dist < 1:
        raise ValueError("distance must be at least one site")
    u = u.normalized()
    spec = transfer_spectrum(u)
    _require_unique(spec)
    l1, r1 = _fixed_points(spec)
    Ea = observable_transfer(u, op_a)
    Eb = observable_transfer(u, op_b)
    bra = l1 @ Ea
    ket = Eb @ r1
    if spec.defective:
        Ek = np.linalg.matrix_power(transfer_operator(u), dist - 1)
        total = bra @ Ek @ ket
        return complex(total - (bra @ r1) * (l1 @ ket)) if connected else complex(total)
    coeffs = (bra @ spec.right) * (spec.left @ ket)
    powers = spec.eigenvalues ** (dist - 1)
    terms = coeffs * powers
    return complex(terms[1:].sum() if connected else terms.sum())


def spectral_bound_constant(u: UniformMps, op_a, op_b) -> float:
    """``K`` with ``|connected(d)| <= K |lambda_2|^{d-1}`` from the spectral expansion."""
    u = u.normalized()
    spec = transfer_spectrum(u)
    _require_unique(spec)
    l1, r1 = _fixed_points(spec)
    bra = l1 @ observable_transfer(u, op_a)
    ket = observable_transfer(u, op_b) @ r1
    coeffs = (bra @ spec.right) * (spec.left @ ket)
    return float(np.sum(np.abs(coeffs[1:])))
