"""Command-line front end: ``tnet <command> [options]``.

Every run is described by a JSON descriptor. Flags map one-to-one onto
descriptor fields; a flag-only invocation is turned into a descriptor and
saved next to the results, so ``tnet <command> --descriptor run/descriptor.json``
replays it. Each run writes into a fresh output directory:

* ``descriptor.json``: the full run description,
* ``result.json``: scalar results,
* CSV files for sequence data and ``.tnet`` files for states,
* ``manifest.json``: inputs, package versions, seed, wall time and the
  SHA-256 of every other file.

Failures print a JSON object ``{"error": ..., "message": ...}`` on stderr
and exit with status 2 (invalid input) or 1 (anything else). Solver
non-convergence is a result (``converged: false``), not a failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import platform
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from . import __version__, cmps, dmrg, ed, expectation, mpo, mps, tebd, uniform
from .errors import DegenerateSpectrumError, ModelError, TnetError

COMMANDS = ("gs", "evolve", "correlate", "entropy-scan", "spectrum", "oracle", "cmps", "fixtures")
SECTIONS = {
    "gs": ("model", "dmrg"),
    "evolve": ("model", "evolve", "state"),
    "correlate": ("state", "correlate"),
    "entropy-scan": ("state",),
    "spectrum": ("spectrum",),
    "oracle": ("model", "oracle"),
    "cmps": ("cmps",),
    "fixtures": ("fixtures",),
}
TOP_KEYS = {"command", "seed", "output"}


class UsageError(TnetError):
    """The descriptor or command line is invalid."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# Descriptor handling


def _set(tree: dict, path: str, value):
    if value is None:
        return
    keys = path.split(".")
    node = tree
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


FLAG_MAP = [
    ("seed", "seed"),
    ("kind", "model.kind"), ("n", "model.n"), ("boundary", "model.boundary"),
    ("gamma", "model.couplings.gamma"), ("lam", "model.couplings.lambda"), ("J", "model.couplings.J"),
    ("D", "dmrg.schedule"), ("mode", "dmrg.mode"), ("max_sweeps", "dmrg.max_sweeps"),
    ("energy_tol", "dmrg.tols.energy"), ("noise", "dmrg.noise"),
    ("dt", "evolve.dt"), ("order", "evolve.order"), ("steps", "evolve.steps"),
    ("D_max", "evolve.D_max"), ("trunc_tol", "evolve.tol"), ("imaginary", "evolve.imaginary"),
    ("record_every", "evolve.record_every"),
    ("state_file", "state.file"), ("fixture", "state.fixture"), ("fixture_n", "state.n"),
    ("product", "state.product"),
    ("op_a", "correlate.op_a"), ("op_b", "correlate.op_b"), ("origin", "correlate.origin"),
    ("max_dist", "correlate.max_dist"),
    ("tensor_file", "spectrum.file"), ("spectrum_fixture", "spectrum.fixture"),
    ("region", "oracle.region"), ("beta", "oracle.beta"),
    ("cmps_input", "cmps.input"), ("points", "cmps.points"), ("eps", "cmps.eps"),
    ("check", "fixtures.check"),
]


def _descriptor_from_args(args) -> dict:
    desc = {}
    if args.descriptor:
        with open(args.descriptor) as fh:
            desc = json.load(fh)
        if desc.get("command", args.command) != args.command:
            raise UsageError(f"descriptor is for command {desc['command']!r}, not {args.command!r}")
    flags = {}
    for attr, path in FLAG_MAP:
        _set(flags, path, getattr(args, attr, None))
    desc = _merge(desc, flags)
    desc["command"] = args.command
    desc.setdefault("seed", 0)
    _validate(desc)
    return desc


def _validate(desc: dict):
    cmd = desc["command"]
    allowed = TOP_KEYS | set(SECTIONS[cmd])
    extra = set(desc) - allowed
    if extra:
        raise UsageError(f"unexpected descriptor fields for {cmd}: {sorted(extra)}")
    for key in SECTIONS[cmd]:
        if key in desc and not isinstance(desc[key], dict):
            raise UsageError(f"descriptor field {key!r} must be an object")
    if not isinstance(desc.get("seed"), int):
        raise UsageError("seed must be an integer")
    if cmd in ("gs", "evolve", "oracle"):
        if "model" not in desc:
            raise UsageError(f"{cmd} needs a model (--kind/--n or descriptor 'model')")
        try:
            mpo.ModelSpec.from_dict(desc["model"])
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"invalid model: {exc}") from exc
    if cmd in ("correlate", "entropy-scan") and not desc.get("state"):
        raise UsageError(f"{cmd} needs a state (--state, --fixture or --product)")
    if cmd == "cmps" and "input" not in desc.get("cmps", {}) and "Q" not in desc.get("cmps", {}):
        raise UsageError("cmps needs --input with Q, R, D, L")


# --------------------------------------------------------------------------
# Inputs


def _operator(name: str, d: int) -> np.ndarray:
    table = mpo.PAULI if d == 2 else mpo.spin1_operators() if d == 3 else {"I": np.eye(d)}
    if name not in table:
        raise UsageError(f"unknown operator {name!r} for local dimension {d}; known: {sorted(table)}")
    return table[name]


def _load_state(sec: dict, seed: int) -> mps.MatrixProductState:
    if "file" in sec:
        return mps.load_mps(sec["file"])
    if "product" in sec:
        return mps.basis_state(sec["product"], int(sec.get("d", 2)))
    if "fixture" in sec:
        return mps.build_fixture(sec["fixture"], int(sec.get("n", 8)), sec.get("boundary", "open"))
    if "random" in sec:
        r = sec["random"]
        return mps.random_mps(int(r["n"]), int(r.get("d", 2)), int(r.get("D", 4)), seed=seed)
    raise UsageError("state needs one of file, product, fixture, random")


# --------------------------------------------------------------------------
# Commands. Each returns the result dict and writes data files into ``out``.


def _cmd_gs(desc, out: Path):
    spec = mpo.ModelSpec.from_dict(desc["model"])
    sec = dict(desc.get("dmrg", {}))
    sec.setdefault("seed", desc["seed"])
    if "schedule" in sec:
        sec["schedule"] = list(np.atleast_1d(sec["schedule"]))
    cfg = dmrg.DmrgConfig.from_dict(sec)
    state, report = dmrg.ground_state(mpo.build_mpo(spec), cfg)
    report.write_csv(out / "dmrg.csv")
    mps.save_mps(out / "state.tnet", state)
    result = report.to_dict()
    result["config"] = cfg.to_dict()
    return result


def _cmd_evolve(desc, out: Path):
    spec = mpo.ModelSpec.from_dict(desc["model"])
    sec = desc.get("evolve", {})
    state = _load_state(desc.get("state", {"product": "0" * spec.n}), desc["seed"])
    imaginary = bool(sec.get("imaginary", False))
    plan = tebd.build_plan(spec, float(sec.get("dt", 0.05)), int(sec.get("order", 2)),
                           int(sec.get("steps", 20)), imaginary)
    run = tebd.evolve_imaginary if imaginary else tebd.evolve
    D_max = sec.get("D_max")
    state, trace = run(state.normalized(), plan, None if D_max is None else int(D_max),
                       float(sec.get("tol", 0.0)), t0=float(sec.get("t0", 0.0)),
                       record_every=int(sec.get("record_every", 1)))
    trace.write_csv(out / "trace.csv")
    mps.save_mps(out / "state.tnet", state, extra={"t": trace.times[-1], "trunc_cum": trace.trunc_cum[-1]})
    return {"t_final": trace.times[-1], "energy_final": trace.energies[-1],
            "S_mid_final": trace.s_mid[-1], "trunc_cum": trace.trunc_cum[-1],
            "bond_dims": list(state.bond_dims)}


def _cmd_correlate(desc, out: Path):
    state = _load_state(desc["state"], desc["seed"]).to_open()
    sec = desc.get("correlate", {})
    d = state.phys_dims[0]
    default = "Z" if d == 2 else "Sz"
    op_a = _operator(sec.get("op_a", default), d)
    op_b = _operator(sec.get("op_b", sec.get("op_a", default)), d)
    origin = int(sec.get("origin", state.n // 4))
    max_dist = int(sec.get("max_dist", state.n - 1 - origin))
    if not 1 <= max_dist <= state.n - 1 - origin:
        raise UsageError(f"max_dist must lie in 1..{state.n - 1 - origin}")
    samples = expectation.correlation_scan(state, op_a, op_b, origin, range(1, max_dist + 1))
    expectation.write_correlator_csv(out / "correlator.csv", samples)
    result = {"origin": origin, "max_dist": max_dist}
    try:
        fit = expectation.fit_correlation_decay([(s.dist, abs(s.connected)) for s in samples])
        result["fit"] = {"amplitude": fit.amplitude, "length": fit.length,
                         "r_squared": fit.r_squared, "n_used": fit.n_used}
    except TnetError as exc:
        result["fit"] = None
        result["fit_error"] = str(exc)
    return result


def _cmd_entropy_scan(desc, out: Path):
    state = _load_state(desc["state"], desc["seed"]).to_open()
    scan = mps.entanglement_scan(state)
    mps.write_entanglement_csv(out / "entanglement.csv", scan)
    return {"n": state.n, "max_S1": max((e.von_neumann for e in scan), default=0.0)}


def _cmd_spectrum(desc, out: Path):
    sec = desc.get("spectrum", {})
    if "file" in sec:
        from .tensor import load_tensor

        A = load_tensor(sec["file"]).transpose(mps.SITE_LABELS).data
    else:
        name = sec.get("fixture", "aklt")
        table = {"aklt": mps.AKLT_MATRICES, "ghz": mps.GHZ_MATRICES}
        if name not in table:
            raise UsageError(f"spectrum fixture must be one of {sorted(table)}")
        A = mps.uniform_tensor(table[name])
    u = uniform.UniformMps(A)
    spec = uniform.transfer_spectrum(u)
    spec.write_csv(out / "spectrum.csv")
    result = {"degenerate": spec.degenerate, "defective": spec.defective,
              "lambda": [[float(w.real), float(w.imag)] for w in spec.eigenvalues]}
    try:
        result["correlation_length"] = uniform.correlation_length(u)
    except DegenerateSpectrumError as exc:
        result["correlation_length"] = None
        result["diagnosis"] = str(exc)
    return result


def _cmd_oracle(desc, out: Path):
    spec = mpo.ModelSpec.from_dict(desc["model"])
    sec = desc.get("oracle", {})
    summary, vecs = ed.solve(spec)
    (out / "summary.json").write_text(ed.summary_json(summary) + "\n")
    psi = vecs[:, 0]
    region = sec.get("region", list(range(spec.n // 2)))
    suite = ed.entropy_suite(psi, region, spec.local_dim)
    rows = [("von_neumann", suite.von_neumann), ("mutual_information", suite.mutual_information),
            ("negativity", suite.negativity), ("log_negativity", suite.log_negativity)]
    rows += [(f"renyi_{a}", v) for a, v in suite.renyi.items()]
    with open(out / "entropy.csv", "w") as fh:
        fh.write("quantity,value\n")
        for name, v in rows:
            fh.write(f"{name},{v:.17g}\n")
    result = {"summary": summary.to_dict(), "region": list(region), "entropies": suite.to_dict()}
    if "beta" in sec:
        beta = float(sec["beta"])
        rho = ed.gibbs(spec, beta)
        H = ed.dense_hamiltonian(spec)
        thermal = ed.entropy_suite(rho, region, spec.local_dim)
        result["gibbs"] = {"beta": beta, "energy": float(np.real(np.trace(H @ rho))),
                           "mutual_information": thermal.mutual_information}
    return result


def _cmd_cmps(desc, out: Path):
    sec = desc["cmps"]
    data = sec
    if "input" in sec:
        with open(sec["input"]) as fh:
            data = json.load(fh)
    c = cmps.ContinuousMps.from_dict(data)
    points = int(sec.get("points", 20))
    xs = np.linspace(0, c.L, points + 2)[1:-1]
    vals = [cmps.density_correlator(c, x) for x in xs]
    cmps.write_correlator_csv(out / "correlator.csv", xs, vals)
    result = {"L": c.L, "D": c.bond_dim, "points": points}
    if "eps" in sec:
        eps = float(sec["eps"])
        x_mid = round(c.L / 2 / eps) * eps
        result["lattice"] = {"eps": eps, "x": x_mid,
                             "value": cmps.lattice_density_correlator(c, eps, x_mid).real,
                             "continuum": cmps.density_correlator(c, x_mid).real}
    return result


def fixture_checks() -> list[dict]:
    """Defining relations of the analytic fixtures, as ``name/value/expected/tol/passed`` rows."""
    rows = []

    def add(name, value, expected, tol):
        value = float(value)
        rows.append({"name": name, "value": value, "expected": float(expected), "tol": tol,
                     "passed": bool(abs(value - expected) <= tol)})

    ghz = mps.build_fixture("ghz", 6)
    for e in mps.entanglement_scan(ghz):
        add(f"ghz_entropy_cut{e.cut}", e.von_neumann, 1.0, 1e-12)
    psi = mps.to_dense(ghz)
    add("ghz_negativity", ed.entropy_suite(psi, [0, 1, 2]).negativity, 1.0, 1e-10)
    cluster = mps.build_fixture("cluster", 8)
    X, Z = mpo.PAULI["X"], mpo.PAULI["Z"]
    K = np.kron(np.kron(Z, X), Z)
    cache = expectation.EnvironmentCache(cluster)
    for j in range(1, 7):
        add(f"cluster_stabilizer_{j}", expectation.local_expectation(cluster, K, j - 1, cache).real, 1.0, 1e-12)
    aklt = mps.build_fixture("aklt", 8, "periodic")
    H = mpo.build_mpo(mpo.ModelSpec(kind="aklt", n=8, boundary="periodic"))
    add("aklt_periodic_energy", mpo.expectation_mpo(aklt, H).real, 0.0, 1e-10)
    u = uniform.UniformMps.from_matrices(mps.AKLT_MATRICES)
    add("aklt_correlation_length", uniform.correlation_length(u), 1 / np.log(3), 1e-9)
    lam = uniform.transfer_spectrum(u).eigenvalues
    for j, expected in enumerate([1.0, -1 / 3, -1 / 3, -1 / 3]):
        add(f"aklt_transfer_lambda{j + 1}", lam[j].real, expected, 1e-10)
    add("aklt_injectivity_length", mps.injectivity_length(uniform.UniformMps.from_matrices(mps.AKLT_MATRICES).tensor, 4), 2, 0)
    return rows


def _cmd_fixtures(desc, out: Path):
    sec = desc.get("fixtures", {})
    n = int(sec.get("n", 8))
    for name in ("ghz", "cluster", "aklt"):
        mps.save_mps(out / f"{name}.tnet", mps.build_fixture(name, n))
    result = {"n": n, "written": ["ghz.tnet", "cluster.tnet", "aklt.tnet"]}
    if sec.get("check"):
        rows = fixture_checks()
        result["checks"] = rows
        result["all_passed"] = all(r["passed"] for r in rows)
    return result


HANDLERS = {
    "gs": _cmd_gs, "evolve": _cmd_evolve, "correlate": _cmd_correlate,
    "entropy-scan": _cmd_entropy_scan, "spectrum": _cmd_spectrum, "oracle": _cmd_oracle,
    "cmps": _cmd_cmps, "fixtures": _cmd_fixtures,
}


# --------------------------------------------------------------------------
# Runner


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dump(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def run(desc: dict, output: str | os.PathLike, threads: int | None = None) -> dict:
    """Execute a validated descriptor, writing all artifacts into ``output``.

    The directory is assembled under a temporary name and renamed into place
    once complete. Returns the result dict.
    """
    _validate(desc)
    target = Path(output)
    if target.exists() and any(target.iterdir()):
        raise UsageError(f"output directory {target} exists and is not empty")
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{target.name}-", dir=target.parent))
    try:
        start = time.perf_counter()
        with threadpool_limits(limits=threads):
            result = HANDLERS[desc["command"]](desc, tmp)
        wall = time.perf_counter() - start
        _dump(tmp / "descriptor.json", desc)
        _dump(tmp / "result.json", result)
        files = {p.name: _sha256(p) for p in sorted(tmp.iterdir()) if p.is_file()}
        manifest = {
            "command": desc["command"],
            "inputs": desc,
            "seed": desc["seed"],
            "threads": threads,
            "wall_time_s": wall,
            "versions": {"tnet": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "files": files,
        }
        _dump(tmp / "manifest.json", manifest)
        if target.exists():
            target.rmdir()
        os.replace(tmp, target)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return result


def _threads(value):
    if value is not None:
        return value
    env = os.environ.get("TNET_THREADS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"TNET_THREADS must be an integer, got {env!r}") from exc
    return None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tnet", description="One-dimensional tensor-network experiments.")
    p.add_argument("--version", action="version", version=f"tnet {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--descriptor", help="JSON run descriptor; flags override its fields")
        sp.add_argument("--out", required=True, help="output directory (must not exist or be empty)")
        sp.add_argument("--threads", type=int, help="BLAS threads (overrides TNET_THREADS); 1 is the reference mode")
        sp.add_argument("--seed", type=int)

    def model(sp):
        sp.add_argument("--kind", choices=[k for k in mpo.KINDS if k != "custom"])
        sp.add_argument("--n", type=int)
        sp.add_argument("--boundary", choices=["open", "periodic"])
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--lambda", dest="lam", type=float)
        sp.add_argument("--J", type=float)

    def state(sp):
        sp.add_argument("--state", dest="state_file", help="MPS in TNET1 format")
        sp.add_argument("--fixture", choices=["ghz", "cluster", "aklt"])
        sp.add_argument("--fixture-n", dest="fixture_n", type=int)
        sp.add_argument("--product", help="basis product state as a digit string")

    sp = sub.add_parser("gs", help="DMRG ground state")
    common(sp)
    model(sp)
    sp.add_argument("--D", type=int, nargs="+", help="bond dimension schedule")
    sp.add_argument("--mode", choices=["two-site", "single-site"])
    sp.add_argument("--max-sweeps", dest="max_sweeps", type=int)
    sp.add_argument("--energy-tol", dest="energy_tol", type=float)
    sp.add_argument("--noise", type=float)

    sp = sub.add_parser("evolve", help="TEBD real or imaginary time evolution")
    common(sp)
    model(sp)
    state(sp)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--order", type=int, choices=[1, 2])
    sp.add_argument("--steps", type=int)
    sp.add_argument("--D-max", dest="D_max", type=int)
    sp.add_argument("--tol", dest="trunc_tol", type=float)
    sp.add_argument("--imaginary", action="store_true", default=None)
    sp.add_argument("--record-every", dest="record_every", type=int)

    sp = sub.add_parser("correlate", help="two-point correlators and decay fit")
    common(sp)
    state(sp)
    sp.add_argument("--op-a", dest="op_a")
    sp.add_argument("--op-b", dest="op_b")
    sp.add_argument("--origin", type=int)
    sp.add_argument("--max-dist", dest="max_dist", type=int)

    sp = sub.add_parser("entropy-scan", help="entanglement entropies at every cut")
    common(sp)
    state(sp)

    sp = sub.add_parser("spectrum", help="transfer-operator spectrum of a uniform tensor")
    common(sp)
    sp.add_argument("--tensor", dest="tensor_file", help="site tensor (left, phys, right) in TNET1 format")
    sp.add_argument("--fixture", dest="spectrum_fixture", choices=["aklt", "ghz"])

    sp = sub.add_parser("oracle", help="exact diagonalization reference")
    common(sp)
    model(sp)
    sp.add_argument("--region", type=int, nargs="+")
    sp.add_argument("--beta", type=float)

    sp = sub.add_parser("cmps", help="continuous-MPS density correlator")
    common(sp)
    sp.add_argument("--input", dest="cmps_input", help="JSON with Q, R (flat), D, L")
    sp.add_argument("--points", type=int)
    sp.add_argument("--eps", type=float, help="also evaluate the lattice correlator at this spacing")

    sp = sub.add_parser("fixtures", help="write fixture states; --check verifies their defining relations")
    common(sp)
    sp.add_argument("--check", action="store_true", default=None)
    return p


def _fail(exc: BaseException, code: int) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        desc = _descriptor_from_args(args)
        result = run(desc, args.out, _threads(args.threads))
    except (UsageError, ModelError) as exc:
        return _fail(exc, 2)
    except Exception as exc:  # machine-readable error for any failure
        return _fail(exc, 1)
    summary = {"command": desc["command"], "output": str(args.out)}
    if desc["command"] == "fixtures" and "all_passed" in result:
        summary["all_passed"] = result["all_passed"]
        print(json.dumps(summary))
        return 0 if result["all_passed"] else 1
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
