"""Exception types raised across the package."""


class TnetError(Exception):
    """Base class for all package errors."""


class LabelError(TnetError, KeyError):
    """An index label is unknown, duplicated or otherwise invalid."""

    def __str__(self):
        return Exception.__str__(self)


class DimensionError(TnetError, ValueError):
    """Extents of paired indices, operators or states do not match."""


class BipartitionError(TnetError, ValueError):
    """A requested split of tensor indices is empty or covers all indices."""


class SymmetryError(TnetError, ValueError):
    """A matrix expected to be Hermitian is not, beyond tolerance."""


class ConvergenceError(TnetError, RuntimeError):
    """An iterative solver hit its iteration cap.

    The best residual reached is kept on ``residual``.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class NormalizationError(TnetError, ValueError):
    """A state cannot be normalized (zero vector or zero tensor)."""


class GaugeError(TnetError, ValueError):
    """A gauge matrix is singular or too badly conditioned."""


class BoundaryError(TnetError, ValueError):
    """The operation does not support the boundary condition of its input."""


class SizeError(TnetError, ValueError):
    """A dense representation would exceed the configured size cap."""


class ModelError(TnetError, ValueError):
    """Invalid or unsupported model specification."""


class DegenerateSpectrumError(TnetError, ValueError):
    """The leading transfer-operator eigenvalue is degenerate in modulus."""


class FitError(TnetError, ValueError):
    """Too few usable samples for a least-squares fit."""


class StaleEnvironmentError(TnetError, RuntimeError):
    """Cached DMRG environments do not belong to the state being swept."""
