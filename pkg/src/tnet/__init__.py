"""Matrix product states and operators for one-dimensional quantum chains.

Submodules
----------
tensor
    Labelled tensors, contraction, truncated SVD, eigensolvers, TNET1 files.
mps
    Matrix product states: gauge, canonical forms, entanglement, fixtures.
mpo
    Model specifications and matrix product operators.
expectation
    Local expectation values, overlaps and correlators of finite chains.
dmrg
    Variational ground-state search.
tebd
    Trotterized real- and imaginary-time evolution.
uniform
    Translation-invariant MPS: transfer spectrum and correlation length.
ed
    Exact diagonalization and dense density-matrix tools.
cmps
    Continuous MPS correlators and their lattice discretization.
"""

__version__ = "0.1.0"

from .errors import TnetError  # noqa: E402
from .tensor import Tensor, contract, svd_split, trace  # noqa: E402
from .mps import (  # noqa: E402
    MatrixProductState,
    build_fixture,
    canonicalize,
    compress,
    entanglement_at_cut,
    random_mps,
    to_dense,
)
from .mpo import MatrixProductOperator, ModelSpec, apply_mpo, build_mpo, expectation_mpo  # noqa: E402
from .expectation import connected_correlator, fit_correlation_decay, local_expectation, overlap  # noqa: E402
from .dmrg import DmrgConfig, DmrgReport, ground_state  # noqa: E402
from .tebd import build_plan, evolve, evolve_imaginary  # noqa: E402
from .uniform import UniformMps, correlation_length, transfer_spectrum  # noqa: E402
from .cmps import ContinuousMps  # noqa: E402

__all__ = [
    "TnetError",
    "Tensor",
    "contract",
    "svd_split",
    "trace",
    "MatrixProductState",
    "build_fixture",
    "canonicalize",
    "compress",
    "entanglement_at_cut",
    "random_mps",
    "to_dense",
    "MatrixProductOperator",
    "ModelSpec",
    "apply_mpo",
    "build_mpo",
    "expectation_mpo",
    "connected_correlator",
    "fit_correlation_decay",
    "local_expectation",
    "overlap",
    "DmrgConfig",
    "DmrgReport",
    "ground_state",
    "build_plan",
    "evolve",
    "evolve_imaginary",
    "UniformMps",
    "correlation_length",
    "transfer_spectrum",
    "ContinuousMps",
]
