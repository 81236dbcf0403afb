"""Continuous MPS for one-dimensional bosonic fields.

A translation-invariant cMPS on a ring of length ``L`` is fixed by two
``D x D`` matrices ``Q`` and ``R``. Expectation values reduce to matrix
exponentials of the transfer generator ``T = Q (x) 1 + 1 (x) conj(Q) + R (x) conj(R)``.
The state is unnormalized as written, so correlators are divided by
``tr exp(T L)`` unless asked otherwise.

Discretizing with lattice spacing ``eps`` gives an ordinary periodic MPS with
``A_0 = 1 + eps Q`` and ``A_k = (sqrt(eps) R)^k / sqrt(k!)`` for ``k >= 1``
in the normalized occupation-number basis ``|k>``, truncated at ``k_max``
bosons per site. The lattice field is ``Psi_j = a_j / sqrt(eps)``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from math import factorial

import numpy as np
import scipy.linalg

from .errors import DimensionError
from .expectation import transfer_matrix
from .mps import MatrixProductState

DEFAULT_KMAX = 4


@dataclass(frozen=True, eq=False)
class ContinuousMps:
    Q: np.ndarray
    R: np.ndarray
    L: float

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=complex))
        R = np.atleast_2d(np.asarray(self.R, dtype=complex))
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        if Q.shape != R.shape or Q.shape[0] != Q.shape[1]:
            raise DimensionError(f"Q {Q.shape} and R {R.shape} must be equal square matrices")
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError("segment length L must be finite and positive")

    @property
    def bond_dim(self) -> int:
        return self.Q.shape[0]

    @classmethod
    def from_dict(cls, data: dict) -> "ContinuousMps":
        """Parse ``{"Q": [...], "R": [...], "D": D, "L": L}``.

        ``Q`` and ``R`` are flat row-major lists; each entry is a number or a
        ``[re, im]`` pair.
        """
        D = int(data["D"])

        def mat(key):
            vals = [complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v) for v in data[key]]
            if len(vals) != D * D:
                raise DimensionError(f"{key} needs {D * D} entries, got {len(vals)}")
            return np.array(vals).reshape(D, D)

        return cls(mat("Q"), mat("R"), float(data["L"]))

    def to_dict(self) -> dict:
        def flat(m):
            return [[float(z.real), float(z.imag)] for z in m.ravel()]

        return {"Q": flat(self.Q), "R": flat(self.R), "D": self.bond_dim, "L": self.L}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def transfer_generator(c: ContinuousMps) -> np.ndarray:
    D = c.bond_dim
    eye = np.eye(D)
    return np.kron(c.Q, eye) + np.kron(eye, c.Q.conj()) + np.kron(c.R, c.R.conj())


def density_correlator(c: ContinuousMps, x: float, normalized: bool = True) -> complex:
    """``<Psi^dag(x) Psi^dag(0) Psi(0) Psi(x)>`` for ``0 < x < L``."""
    if not 0 < x < c.L:
        raise ValueError(f"x = {x} outside (0, {c.L})")
    T = transfer_generator(c)
    RR = np.kron(c.R, c.R.conj())
    val = np.trace(scipy.linalg.expm(T * (c.L - x)) @ RR @ scipy.linalg.expm(T * x) @ RR)
    if normalized:
        val = val / np.trace(scipy.linalg.expm(T * c.L))
    return complex(val)


def _sites(c: ContinuousMps, eps: float) -> int:
    n = c.L / eps
    m = int(round(n))
    if m < 2 or abs(n - m) > 1e-9 * max(1.0, n):
        raise ValueError(f"L / eps = {n} is not an integer number of sites (>= 2)")
    return m


def local_matrices(c: ContinuousMps, eps: float, k_max: int = DEFAULT_KMAX) -> np.ndarray:
    """Lattice matrices ``A_0 .. A_{k_max}`` as an array ``(k_max + 1, D, D)``."""
    if k_max < 2:
        raise ValueError("local boson cutoff k_max must be at least 2")
    D = c.bond_dim
    mats = [np.eye(D) + eps * c.Q]
    power = np.eye(D, dtype=complex)
    step = np.sqrt(eps) * c.R
    for k in range(1, k_max + 1):
        power = power @ step
        mats.append(power / np.sqrt(factorial(k)))
    return np.array(mats)


def discretize(c: ContinuousMps, eps: float, k_max: int = DEFAULT_KMAX) -> MatrixProductState:
    """Periodic lattice MPS on ``L / eps`` sites with local dimension ``k_max + 1``."""
    n = _sites(c, eps)
    A = local_matrices(c, eps, k_max).transpose(1, 0, 2)
    return MatrixProductState(tuple(A.copy() for _ in range(n)), boundary="periodic")


def lattice_density_correlator(c: ContinuousMps, eps: float, x: float, k_max: int = DEFAULT_KMAX) -> complex:
    """Normalized lattice ``<n_0 n_m> / eps^2`` with ``m = x / eps``.

    Evaluated as ``tr(E_n E^{m-1} E_n E^{n-m-1}) / tr(E^n)`` with ``E`` the
    site transfer operator and ``E_n`` its number-operator dressing.
    """
    n = _sites(c, eps)
    m = x / eps
    mi = int(round(m))
    if abs(m - mi) > 1e-9 * max(1.0, m) or not 0 < mi < n:
        raise ValueError(f"x = {x} is not a lattice point strictly inside the ring")
    A = local_matrices(c, eps, k_max).transpose(1, 0, 2)
    E = transfer_matrix(A)
    En = transfer_matrix(A, np.diag(np.arange(k_max + 1, dtype=float)))
    mp = np.linalg.matrix_power
    num = np.trace(En @ mp(E, mi - 1) @ En @ mp(E, n - mi - 1))
    return complex(num / np.trace(mp(E, n)) / eps**2)


def write_correlator_csv(path, xs, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "correlator"])
        for x, v in zip(xs, values):
            w.writerow([f"{x:.17g}", f"{complex(v).real:.17g}"])
