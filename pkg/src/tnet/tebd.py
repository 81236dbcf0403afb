"""Real- and imaginary-time evolution by Trotterized two-site gates (TEBD).

The Hamiltonian of a nearest-neighbor open chain is split into even-bond
and odd-bond parts, each a sum of commuting two-site terms, and
``exp(-i H dt)`` is replaced by a product of exact two-site exponentials.
Order 1 is ``U_even U_odd``; order 2 (the default) is the symmetric
``U_even(dt/2) U_odd(dt) U_even(dt/2)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ModelError, NormalizationError
from .mpo import ModelSpec, build_mpo, bond_terms, expectation_mpo
from .mps import MatrixProductState, canonicalize, entanglement_at_cut
from .tensor import truncated_svd


@dataclass(frozen=True)
class TrotterPlan:
    """Gate layers for one Trotter step.

    ``layers`` is a sequence of ``(bonds, gates)`` pairs applied in order;
    bond ``b`` couples sites ``b`` and ``b + 1`` and each gate is a
    ``d^2 x d^2`` matrix acting on ``|j_b j_{b+1}>``.
    """

    spec: ModelSpec
    dt: float
    order: int
    steps: int
    imaginary: bool
    even_gates: tuple
    odd_gates: tuple
    layers: tuple = field(repr=False)

    @property
    def total_time(self) -> float:
        return self.dt * self.steps


def _gate(h, tau, imaginary):
    return scipy.linalg.expm(-h * tau if imaginary else -1j * h * tau)


def build_plan(spec: ModelSpec, dt: float, order: int = 2, steps: int = 1,
               imaginary: bool = False) -> TrotterPlan:
    """Even/odd gate layers for ``spec`` with time step ``dt``.

    For ``imaginary=True`` the gates are ``exp(-h dt)`` (``dt`` plays the
    role of ``d beta``).
    """
    if order not in (1, 2):
        raise ValueError("Trotter order must be 1 or 2")
    if steps < 0:
        raise ValueError("number of steps must be non-negative")
    if not spec.nearest_neighbor:
        raise ModelError(f"{spec.kind} is not a nearest-neighbor model; TEBD needs two-site terms")
    terms = bond_terms(spec)
    for h in terms:
        if not np.allclose(h, h.conj().T, atol=1e-12):
            raise ModelError("two-site terms must be Hermitian")
    even = tuple(range(0, spec.n - 1, 2))
    odd = tuple(range(1, spec.n - 1, 2))
    full_even = tuple(_gate(terms[b], dt, imaginary) for b in even)
    full_odd = tuple(_gate(terms[b], dt, imaginary) for b in odd)
    if order == 1:
        layers = ((even, full_even), (odd, full_odd))
    else:
        half = tuple(_gate(terms[b], dt / 2, imaginary) for b in even)
        layers = ((even, half), (odd, full_odd), (even, half))
    return TrotterPlan(spec, float(dt), order, int(steps), imaginary, full_even, full_odd, layers)


@dataclass
class EvolutionTrace:
    times: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    s_mid: list = field(default_factory=list)
    trunc_cum: list = field(default_factory=list)

    def record(self, t, energy, s, trunc):
        self.times.append(float(t))
        self.energies.append(float(energy))
        self.s_mid.append(float(s))
        self.trunc_cum.append(float(trunc))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "energy", "S_mid", "trunc_cum"])
            for row in zip(self.times, self.energies, self.s_mid, self.trunc_cum):
                w.writerow([f"{x:.17g}" for x in row])

    def to_dict(self) -> dict:
        return {"t": self.times, "energy": self.energies, "S_mid": self.s_mid, "trunc_cum": self.trunc_cum}


class _Chain:
    """Mutable site list with a tracked orthogonality center."""

    def __init__(self, mps: MatrixProductState):
        state = canonicalize(mps.to_open(), "right")
        self.tensors = [t.astype(complex) for t in state.tensors]
        self.center = 0

    def move(self, target):
        ts = self.tensors
        while self.center < target:
            k = self.center
            dl, d, dr = ts[k].shape
            q, r = np.linalg.qr(ts[k].reshape(dl * d, dr))
            ts[k] = q.reshape(dl, d, -1)
            ts[k + 1] = np.tensordot(r, ts[k + 1], axes=(1, 0))
            self.center += 1
        while self.center > target:
            k = self.center
            dl, d, dr = ts[k].shape
            q, r = np.linalg.qr(ts[k].reshape(dl, d * dr).conj().T)
            ts[k] = q.conj().T.reshape(-1, d, dr)
            ts[k - 1] = np.tensordot(ts[k - 1], r.conj().T, axes=(2, 0))
            self.center -= 1

    def apply(self, b, gate, D_max, tol):
        """Apply ``gate`` on bond ``b``; returns the relative discarded weight."""
        self.move(b)
        A, B = self.tensors[b], self.tensors[b + 1]
        dl, d1, _ = A.shape
        _, d2, dr = B.shape
        theta = np.tensordot(A, B, axes=(2, 0))                       # a, s1, s2, c
        g = gate.reshape(d1, d2, d1, d2)
        theta = np.tensordot(g, theta, axes=([2, 3], [1, 2]))         # o1, o2, a, c
        theta = theta.transpose(2, 0, 1, 3).reshape(dl * d1, d2 * dr)
        u, s, vh, disc = truncated_svd(theta, D_max, tol)
        total = float(np.sum(s**2)) + disc
        if total == 0 or not np.isfinite(total):
            raise NormalizationError("state norm vanished during evolution")
        s = s / np.linalg.norm(s)
        self.tensors[b] = u.reshape(dl, d1, -1)
        self.tensors[b + 1] = (s[:, None] * vh).reshape(-1, d2, dr)
        self.center = b + 1
        return disc / total

    def state(self) -> MatrixProductState:
        return MatrixProductState(tuple(self.tensors), gauge="mixed", center=self.center)


def _run(mps, plan, D_max, tol, steps, t0, trunc0, record_every):
    if abs(mps.norm() - 1.0) > 1e-8:
        raise NormalizationError("evolution needs a normalized input state")
    steps = plan.steps if steps is None else int(steps)
    op = build_mpo(plan.spec)
    chain = _Chain(mps)
    trace = EvolutionTrace()
    trunc = trunc0
    mid = plan.spec.n // 2

    def observe(t):
        st = chain.state()
        energy = expectation_mpo(st, op).real
        s = entanglement_at_cut(canonicalize(st, "right"), mid).von_neumann if plan.spec.n > 1 else 0.0
        trace.record(t, energy, s, trunc)

    observe(t0)
    for step in range(1, steps + 1):
        for bonds, gates in plan.layers:
            for b, g in zip(bonds, gates):
                trunc += chain.apply(b, g, D_max, tol)
        if step % record_every == 0 or step == steps:
            observe(t0 + step * plan.dt)
    return chain.state(), trace


def evolve(mps: MatrixProductState, plan: TrotterPlan, D_max: int | None = None, tol: float = 0.0,
           steps: int | None = None, t0: float = 0.0, trunc0: float = 0.0,
           record_every: int = 1) -> tuple[MatrixProductState, EvolutionTrace]:
    """Real-time evolution ``exp(-i H t)|psi>`` with truncation to ``(D_max, tol)``.

    ``t0`` and ``trunc0`` continue the time axis and the cumulative
    truncation weight of a run resumed from a checkpoint.
    """
    if plan.imaginary:
        raise ValueError("plan was built for imaginary time; use evolve_imaginary")
    return _run(mps, plan, D_max, tol, steps, t0, trunc0, record_every)


def evolve_imaginary(mps: MatrixProductState, plan: TrotterPlan, D_max: int | None = None, tol: float = 0.0,
                     steps: int | None = None, t0: float = 0.0, trunc0: float = 0.0,
                     record_every: int = 1) -> tuple[MatrixProductState, EvolutionTrace]:
    """Imaginary-time projection ``exp(-beta H)|psi>``, renormalized after every gate."""
    if not plan.imaginary:
        raise ValueError("plan was built for real time; use evolve")
    return _run(mps, plan, D_max, tol, steps, t0, trunc0, record_every)


def dense_step(plan: TrotterPlan) -> np.ndarray:
    """Dense matrix of one Trotter step (small chains, for checks)."""
    n, d = plan.spec.n, plan.spec.local_dim
    U = np.eye(d**n, dtype=complex)
    for bonds, gates in plan.layers:
        for b, g in zip(bonds, gates):
            full = np.kron(np.kron(np.eye(d**b), g), np.eye(d ** (n - b - 2)))
            U = full @ U
    return U
