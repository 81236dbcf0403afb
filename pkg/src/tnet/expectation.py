"""Expectation values, overlaps and two-point correlators of finite MPS.

All contractions run through boundary environments built from the site
transfer operators ``E = sum_j A_j (x) conj(A_j)``, so a single observable
costs one pass over the chain and the state does not need to be in any
particular gauge. :class:`EnvironmentCache` keeps the left and right
environments so a scan over many sites reuses them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, FitError
from .mps import MatrixProductState


def transfer_matrix(A, op=None) -> np.ndarray:
    """Site transfer operator as a ``D_l**2 x D_r**2`` matrix.

    ``E[(a, a'), (b, b')] = sum_{j,k} <k|op|j> A[a, j, b] conj(A[a', k, b'])``
    with ``op`` the identity when omitted.
    """
    A = np.asarray(A)
    if op is None:
        E = np.einsum("ajb,cjd->acbd", A, A.conj())
    else:
        E = np.einsum("kj,ajb,ckd->acbd", np.asarray(op), A, A.conj())
    Dl, Dr = A.shape[0], A.shape[2]
    return E.reshape(Dl * Dl, Dr * Dr)


def _push_left(env, A, op=None, B=None):
    """``env[ket, bra] -> env'[ket, bra]`` through one site."""
    B = A if B is None else B
    t = np.tensordot(env, A, axes=(0, 0))  # bra, j, ket'
    if op is not None:
        t = np.tensordot(t, op, axes=(1, 1)).transpose(0, 2, 1)
    return np.tensordot(t, B.conj(), axes=([0, 1], [0, 1]))


def _push_right(env, A, op=None, B=None):
    B = A if B is None else B
    t = np.tensordot(A, env, axes=(2, 0))  # ket, j, bra'
    if op is not None:
        t = np.tensordot(op, t, axes=(1, 1)).transpose(1, 0, 2)
    return np.tensordot(t, B.conj(), axes=([1, 2], [1, 2]))


class EnvironmentCache:
    """Left and right norm environments of an open chain.

    ``left[k]`` contracts sites ``0..k-1`` and ``right[k]`` sites
    ``k..n-1``; both are ``(ket, bra)`` matrices.
    """

    def __init__(self, mps: MatrixProductState):
        mps = mps.to_open()
        self.state = mps
        n = mps.n
        dt = mps.dtype
        self.left = [np.ones((1, 1), dtype=dt)]
        for t in mps.tensors:
            self.left.append(_push_left(self.left[-1], t))
        self.right = [None] * (n + 1)
        self.right[n] = np.ones((1, 1), dtype=dt)
        for k in range(n - 1, -1, -1):
            self.right[k] = _push_right(self.right[k + 1], mps.tensors[k])
        self.norm2 = float(self.left[n][0, 0].real)

    def window(self, ops: dict[int, np.ndarray]) -> complex:
        """Unnormalized ``<psi| prod_k op_k |psi>`` for single-site operators."""
        if not ops:
            return complex(self.norm2)
        sites = sorted(ops)
        lo, hi = sites[0], sites[-1]
        if lo < 0 or hi >= self.state.n:
            raise DimensionError(f"sites {sites} outside the chain")
        env = self.left[lo]
        for k in range(lo, hi + 1):
            env = _push_left(env, self.state.tensors[k], ops.get(k))
        return complex(np.sum(env * self.right[hi + 1]))


def _support_tensor(obs, d: Sequence[int]):
    r = len(d)
    obs = np.asarray(obs)
    size = int(np.prod(d))
    if obs.shape != (size, size):
        raise DimensionError(f"observable shape {obs.shape} does not match {r} sites of dims {tuple(d)}")
    return obs.reshape(tuple(d) + tuple(d))


def local_expectation(mps: MatrixProductState, obs, site: int, cache: EnvironmentCache | None = None) -> complex:
    """``<psi|O|psi> / <psi|psi>`` for a dense ``O`` on sites ``site .. site+r-1``.

    The support length ``r`` follows from the shape of ``obs``.
    """
    cache = cache or EnvironmentCache(mps)
    st = cache.state
    obs = np.asarray(obs)
    # infer support length from the matrix size
    r, size = 0, 1
    while size < obs.shape[0] and site + r < st.n:
        size *= st.phys_dims[site + r]
        r += 1
    if site < 0 or size != obs.shape[0] or r == 0:
        raise DimensionError(f"observable of size {obs.shape[0]} does not fit at site {site}")
    O = _support_tensor(obs, st.phys_dims[site:site + r])
    # ket tensor for the block: (a, j1..jr, b)
    ket = st.tensors[site]
    for k in range(site + 1, site + r):
        ket = np.tensordot(ket, st.tensors[k], axes=(ket.ndim - 1, 0))
    phys = list(range(1, r + 1))
    Oket = np.tensordot(O, ket, axes=(list(range(r, 2 * r)), phys))  # j.., a, b
    Oket = np.moveaxis(Oket, [r, r + 1], [0, r + 1])
    t = np.tensordot(cache.left[site], Oket, axes=(0, 0))  # bra, j.., b
    t = np.tensordot(t, ket.conj(), axes=([0] + phys, [0] + phys))  # b, b'
    val = np.sum(t * cache.right[site + r])
    return complex(val / cache.norm2)


def overlap(a: MatrixProductState, b: MatrixProductState) -> complex:
    """Scalar product ``<a|b>`` in ``O(n d D**3)``."""
    a, b = a.to_open(), b.to_open()
    if a.phys_dims != b.phys_dims:
        raise DimensionError(f"physical dims differ: {a.phys_dims} vs {b.phys_dims}")
    env = np.ones((1, 1), dtype=np.result_type(a.dtype, b.dtype))
    for ta, tb in zip(a.tensors, b.tensors):
        env = _push_left(env, tb, B=ta)
    return complex(env[0, 0])


def connected_correlator(mps: MatrixProductState, op_a, i: int, op_b, j: int,
                         cache: EnvironmentCache | None = None) -> tuple[complex, complex]:
    """Raw ``<O_A O_B>`` and connected ``<O_A O_B> - <O_A><O_B>`` for single-site operators."""
    if i == j:
        raise ValueError("correlator sites must differ")
    cache = cache or EnvironmentCache(mps)
    op_a, op_b = np.asarray(op_a), np.asarray(op_b)
    raw = cache.window({i: op_a, j: op_b}) / cache.norm2
    ma = cache.window({i: op_a}) / cache.norm2
    mb = cache.window({j: op_b}) / cache.norm2
    return complex(raw), complex(raw - ma * mb)


@dataclass(frozen=True)
class CorrelatorSample:
    dist: int
    raw: complex
    connected: complex


def correlation_scan(mps: MatrixProductState, op_a, op_b, origin: int, distances: Sequence[int]) -> list[CorrelatorSample]:
    """Correlators between ``origin`` and ``origin + dist`` from one environment cache."""
    cache = EnvironmentCache(mps)
    out = []
    for dist in distances:
        raw, conn = connected_correlator(mps, op_a, origin, op_b, origin + int(dist), cache)
        out.append(CorrelatorSample(int(dist), raw, conn))
    return out


def write_correlator_csv(path, samples: Sequence[CorrelatorSample]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dist", "raw_re", "raw_im", "connected_abs"])
        for s in samples:
            w.writerow([s.dist, f"{s.raw.real:.17g}", f"{s.raw.imag:.17g}", f"{abs(s.connected):.17g}"])


@dataclass(frozen=True)
class DecayFit:
    """``|C(d)| ~ amplitude * exp(-d / length)``; ``r_squared`` is the fit quality."""

    amplitude: float
    length: float
    r_squared: float
    n_used: int


MIN_FIT_SAMPLES = 4


def fit_correlation_decay(samples) -> DecayFit:
    """Least-squares fit of ``log|C|`` against distance.

    ``samples`` is a sequence of ``(dist, value)`` pairs. Non-positive values
    are dropped. A non-decaying fit reports ``length = inf``; constant data
    give ``r_squared = 0``.
    """
    data = np.asarray([(float(d), float(v)) for d, v in samples], dtype=float).reshape(-1, 2)
    keep = data[:, 1] > 0
    data = data[keep]
    if len(data) < MIN_FIT_SAMPLES:
        raise FitError(f"need at least {MIN_FIT_SAMPLES} positive samples, got {len(data)}")
    x, y = data[:, 0], np.log(data[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    # log-values equal up to roundoff: no decay to speak of
    flat = ss_tot <= 1e-20 * max(1.0, float(np.sum(y**2)))
    r2 = 0.0 if flat else 1.0 - float(np.sum(resid**2)) / ss_tot
    length = float("inf") if flat or slope >= 0 else float(-1.0 / slope)
    return DecayFit(float(np.exp(intercept)), length, r2, len(data))
