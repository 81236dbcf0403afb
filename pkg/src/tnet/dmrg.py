"""Variational ground-state search by sweeping local eigenproblems (DMRG).

The state is kept in mixed canonical form with the orthogonality center on
the site (or pair of sites) being optimized, so the local norm matrix is the
identity and every local step is a standard Hermitian eigenproblem solved by
Lanczos. Environments of the Hamiltonian MPO are cached on both sides of the
center and updated incrementally as the center moves.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BoundaryError, StaleEnvironmentError, SymmetryError
from .mpo import MatrixProductOperator, left_env_step, right_env_step
from .mps import MatrixProductState, canonicalize, random_mps
from .tensor import lowest_eigpair, truncated_svd


@dataclass(frozen=True)
class DmrgConfig:
    """Sweep protocol.

    ``schedule[i]`` is the maximal bond dimension during sweep ``i`` (one
    sweep is a left-to-right pass followed by a right-to-left pass); the last
    entry is reused once the list runs out. ``svd_tol`` is the relative
    discarded weight allowed in two-site splits. ``noise`` perturbs the
    single-site update, decaying by a factor ten per sweep.
    """

    schedule: tuple = (16,)
    mode: str = "two-site"
    max_sweeps: int = 20
    energy_tol: float = 1e-10
    eig_tol: float = 1e-10
    svd_tol: float = 1e-14
    noise: float = 0.0
    seed: int | None = 0

    def __post_init__(self):
        sched = tuple(int(D) for D in np.atleast_1d(self.schedule))
        object.__setattr__(self, "schedule", sched)
        if not sched or min(sched) < 1:
            raise ValueError("bond schedule needs positive entries")
        if any(b < a for a, b in zip(sched, sched[1:])):
            raise ValueError("bond schedule must be non-decreasing")
        if self.mode not in ("two-site", "single-site"):
            raise ValueError(f"unknown DMRG mode {self.mode!r}")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be positive")
        for name in ("energy_tol", "eig_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.svd_tol < 0 or self.noise < 0:
            raise ValueError("svd_tol and noise must be non-negative")

    def bond_dim(self, sweep: int) -> int:
        return self.schedule[min(sweep, len(self.schedule) - 1)]

    @classmethod
    def from_dict(cls, data: dict) -> "DmrgConfig":
        data = dict(data)
        tols = data.pop("tols", {}) or {}
        for key in ("energy_tol", "eig_tol", "svd_tol"):
            short = key.split("_")[0]
            if short in tols:
                data[key] = tols[short]
            elif key in tols:
                data[key] = tols[key]
        if "schedule" in data:
            data["schedule"] = tuple(data["schedule"])
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["schedule"] = list(self.schedule)
        return out


@dataclass
class DmrgReport:
    energies: list = field(default_factory=list)
    variances: list = field(default_factory=list)
    trunc_weights: list = field(default_factory=list)
    energy: float = float("nan")
    variance: float = float("nan")
    converged: bool = False
    sweeps: int = 0
    bond_dims: tuple = ()

    def to_dict(self) -> dict:
        out = asdict(self)
        out["bond_dims"] = list(self.bond_dims)
        out["note"] = "energies are variational upper bounds; convergence is local only"
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sweep", "energy", "variance", "max_trunc_weight"])
            for i, (e, v, t) in enumerate(zip(self.energies, self.variances, self.trunc_weights)):
                w.writerow([i + 1, f"{e:.17g}", f"{v:.17g}", f"{t:.17g}"])


# --------------------------------------------------------------------------
# Environments


class Environments:
    """Cached MPO environments of one state around its orthogonality center.

    ``left[k]`` contracts sites ``0..k-1`` and ``right[k]`` sites ``k..n-1``;
    each is indexed ``[bra, w, ket]``. ``state`` is the MPS the cache was
    built for; sweeping a different state raises
    :class:`StaleEnvironmentError`.
    """

    def __init__(self, state: MatrixProductState, op: MatrixProductOperator):
        if state.gauge not in ("right", "mixed") or state.center != 0:
            raise ValueError("environments are built for a right-canonical state centered at site 0")
        n = state.n
        dt = np.result_type(state.dtype, op.dtype)
        self.op = op
        self.state = state
        self.left = [None] * (n + 1)
        self.right = [None] * (n + 1)
        self.left[0] = np.ones((1, 1, 1), dtype=dt)
        self.right[n] = np.ones((1, 1, 1), dtype=dt)
        for k in range(n - 1, 0, -1):
            self.right[k] = right_env_step(self.right[k + 1], state.tensors[k], op.tensors[k])


def _heff_two(L, W1, W2, R, shape):
    def apply(x):
        x = x.reshape(shape)
        t = np.tensordot(L, x, axes=(2, 0))                    # a', wl, s1, s2, b
        t = np.tensordot(t, W1, axes=([1, 2], [0, 3]))         # a', s2, b, wm, o1
        t = np.tensordot(t, W2, axes=([3, 1], [0, 3]))         # a', b, o1, wr, o2
        t = np.tensordot(t, R, axes=([1, 3], [2, 1]))          # a', o1, o2, b'
        return t.ravel()
    return apply


def _heff_one(L, W, R, shape):
    def apply(x):
        x = x.reshape(shape)
        t = np.tensordot(L, x, axes=(2, 0))                    # a', wl, s, b
        t = np.tensordot(t, W, axes=([1, 2], [0, 3]))          # a', b, wr, o
        t = np.tensordot(t, R, axes=([1, 2], [2, 1]))          # a', o, b'
        return t.ravel()
    return apply


def _solve(apply, guess, tol, op_dtype):
    # a real state under a complex MPO must be optimized over complex vectors
    dtype = np.result_type(guess.dtype, op_dtype)
    value, vec, _ = lowest_eigpair(apply, guess.size, dtype, guess=guess.astype(dtype), tol=tol)
    return value, vec


def _sweep_two_site(tensors, envs, op, D, cfg):
    n = len(tensors)
    worst = 0.0
    energy = float("nan")

    def local(k):
        theta = np.tensordot(tensors[k], tensors[k + 1], axes=(2, 0))
        apply = _heff_two(envs.left[k], op.tensors[k], op.tensors[k + 1], envs.right[k + 2], theta.shape)
        e, vec = _solve(apply, theta.ravel(), cfg.eig_tol, op.dtype)
        dl, d1, d2, dr = theta.shape
        u, s, vh, disc = truncated_svd(vec.reshape(dl * d1, d2 * dr), D, cfg.svd_tol)
        total = float(np.sum(s**2)) + disc
        s = s / np.linalg.norm(s)
        return e, u.reshape(dl, d1, -1), s, vh.reshape(-1, d2, dr), disc / total

    for k in range(n - 1):
        energy, u, s, vh, w = local(k)
        worst = max(worst, w)
        tensors[k] = u
        tensors[k + 1] = s[:, None, None] * vh
        envs.left[k + 1] = left_env_step(envs.left[k], tensors[k], op.tensors[k])
    for k in range(n - 2, -1, -1):
        energy, u, s, vh, w = local(k)
        worst = max(worst, w)
        tensors[k] = u * s[None, None, :]
        tensors[k + 1] = vh
        envs.right[k + 1] = right_env_step(envs.right[k + 2], tensors[k + 1], op.tensors[k + 1])
    return energy, worst


def _sweep_one_site(tensors, envs, op, noise, rng, eig_tol):
    n = len(tensors)
    energy = float("nan")

    def local(k):
        t = tensors[k]
        apply = _heff_one(envs.left[k], op.tensors[k], envs.right[k + 1], t.shape)
        e, vec = _solve(apply, t.ravel(), eig_tol, op.dtype)
        vec = vec.reshape(t.shape)
        if noise > 0:
            pert = rng.standard_normal(t.shape)
            if np.iscomplexobj(vec):
                pert = pert + 1j * rng.standard_normal(t.shape)
            vec = vec + noise * pert
            vec = vec / np.linalg.norm(vec)
        return e, vec

    for k in range(n):
        energy, t = local(k)
        if k == n - 1:
            tensors[k] = t
            break
        dl, d, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl * d, dr))
        tensors[k] = q.reshape(dl, d, -1)
        tensors[k + 1] = np.tensordot(r, tensors[k + 1], axes=(1, 0))
        envs.left[k + 1] = left_env_step(envs.left[k], tensors[k], op.tensors[k])
    for k in range(n - 1, -1, -1):
        energy, t = local(k)
        if k == 0:
            tensors[k] = t
            break
        dl, d, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl, d * dr).conj().T)
        tensors[k] = q.conj().T.reshape(-1, d, dr)
        tensors[k - 1] = np.tensordot(tensors[k - 1], r.conj().T, axes=(2, 0))
        envs.right[k] = right_env_step(envs.right[k + 1], tensors[k], op.tensors[k])
    return energy, 0.0


def sweep_once(state: MatrixProductState, envs: Environments, cfg: DmrgConfig,
               sweep: int = 0, rng=None):
    """One left-to-right and right-to-left pass.

    The orthogonality center starts and ends at site 0. Returns
    ``(new_state, new_envs, local_energy, max_truncation_weight)``; the
    environments object is updated in place and re-bound to the new state.
    """
    if envs.state is not state:
        raise StaleEnvironmentError("environments were built for a different state")
    if state.center != 0:
        raise StaleEnvironmentError("state center is not at the sweep origin")
    op = envs.op
    tensors = list(state.tensors)
    if cfg.mode == "two-site":
        energy, worst = _sweep_two_site(tensors, envs, op, cfg.bond_dim(sweep), cfg)
    else:
        rng = np.random.default_rng(cfg.seed) if rng is None else rng
        noise = cfg.noise * 10.0 ** (-sweep)
        energy, worst = _sweep_one_site(tensors, envs, op, noise, rng, cfg.eig_tol)
    tensors[0] = tensors[0] / np.linalg.norm(tensors[0])
    new = state.with_tensors(tensors, gauge="mixed", center=0)
    envs.state = new
    return new, envs, energy, worst


# --------------------------------------------------------------------------
# Energies


def _double_env_step(L, A, W):
    """``L[bra, w_up, w_low, ket]`` through one site of ``<A| H H |A>``."""
    t = np.tensordot(L, A, axes=(3, 0))                      # bra, wu, wl, s, ket'
    t = np.tensordot(t, W, axes=([2, 3], [0, 3]))            # bra, wu, ket', wl', o
    t = np.tensordot(t, W, axes=([1, 4], [0, 3]))            # bra, ket', wl', wu', o2
    t = np.tensordot(A.conj(), t, axes=([0, 1], [0, 4]))     # bra', ket', wl', wu'
    return t.transpose(0, 3, 2, 1)


def energy_and_variance(mps: MatrixProductState, op: MatrixProductOperator) -> tuple[float, float]:
    """``<H>`` and ``<H^2> - <H>^2`` of a state (normalized on the fly)."""
    st = mps.to_open()
    dt = np.result_type(st.dtype, op.dtype)
    L1 = np.ones((1, 1, 1), dtype=dt)
    L2 = np.ones((1, 1, 1, 1), dtype=dt)
    N = np.ones((1, 1), dtype=dt)
    for A, W in zip(st.tensors, op.tensors):
        L1 = left_env_step(L1, A, W)
        L2 = _double_env_step(L2, A, W)
        N = np.tensordot(A.conj(), np.tensordot(N, A, axes=(1, 0)), axes=([0, 1], [0, 1]))
    norm2 = N[0, 0].real
    e = L1[0, 0, 0].real / norm2
    h2 = L2[0, 0, 0, 0].real / norm2
    return float(e), float(h2 - e * e)


def energy_variance(mps: MatrixProductState, op: MatrixProductOperator) -> float:
    """Energy variance ``<H^2> - <H>^2``."""
    return energy_and_variance(mps, op)[1]


def ground_state(op: MatrixProductOperator, cfg: DmrgConfig | None = None,
                 init: MatrixProductState | None = None) -> tuple[MatrixProductState, DmrgReport]:
    """Approximate ground state of a Hermitian open-chain MPO.

    Without ``init`` the start is a seeded random right-canonical MPS, real
    when the MPO is real. Non-convergence is reported through
    ``report.converged``, never raised.
    """
    cfg = cfg or DmrgConfig()
    if not op.hermitian:
        raise SymmetryError("DMRG needs a Hermitian MPO")
    if op.boundary != "open":
        raise BoundaryError("DMRG is implemented for open chains only")
    rng = np.random.default_rng(cfg.seed)
    if init is None:
        D0 = cfg.schedule[0] if cfg.mode == "two-site" else cfg.schedule[-1]
        dtype = float if not np.iscomplexobj(np.zeros(0, op.dtype)) else complex
        state = random_mps(op.n, list(op.phys_dims), D0, seed=rng, dtype=dtype)
    else:
        if init.phys_dims != op.phys_dims:
            raise ValueError("initial state does not match the operator")
        state = canonicalize(init.to_open(), "right")
    envs = Environments(state, op)
    report = DmrgReport()
    prev = float("inf")
    for sweep in range(cfg.max_sweeps):
        state, envs, _, worst = sweep_once(state, envs, cfg, sweep, rng)
        e, var = energy_and_variance(state, op)
        report.energies.append(e)
        report.variances.append(var)
        report.trunc_weights.append(worst)
        report.sweeps = sweep + 1
        settled = sweep + 1 >= len(cfg.schedule)
        if settled and abs(e - prev) < cfg.energy_tol and var < 10 * cfg.energy_tol:
            report.converged = True
            break
        prev = e
    report.energy = report.energies[-1]
    report.variance = report.variances[-1]
    report.bond_dims = state.bond_dims
    return state, report
