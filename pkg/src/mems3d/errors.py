"""Exception hierarchy shared by the package.

The CLI maps these onto exit codes: configuration problems exit with 2,
solver failures with 3.
"""


class ConfigError(ValueError):
    """Invalid scenario configuration or material data."""


class UnitError(ConfigError):
    """A quantity was given in a unit incompatible with its field."""


class MeshSpecError(ConfigError):
    """A mesh specification cannot be discretized."""


class GeometryError(ValueError):
    """Requested geometry is outside the supported range."""


class DegenerateFitError(ValueError):
    """Circle fit requested from (nearly) collinear points; radius effectively infinite."""


class SolverError(RuntimeError):
    """Base class for numerical failures inside the FEM solver."""


class SingularMatrixError(SolverError):
    """Direct factorization hit a zero pivot or a structurally deficient matrix."""


class ElementInversionError(SolverError):
    """An element Jacobian became non-positive during deformation."""


class ContinuationError(SolverError):
    """Newton continuation failed at the minimum load-step size."""

    def __init__(self, message, load_factor=0.0, history=()):
        super().__init__(message)
        self.load_factor = load_factor
        self.history = list(history)
