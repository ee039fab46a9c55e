"""Exception hierarchy for the solver stack.

Every numerical failure mode raises a named subclass of SolverError so the
CLI can map it to an exit code and echo the failing stage.
"""


class SolverError(Exception):
    """Base class for all numerical failures in this package."""


class BracketNotFoundError(SolverError):
    """Initial shooting bracket does not straddle the ground state."""


class ToleranceNotReachedError(SolverError):
    """Bisection exhausted its iteration budget before reaching tolerance."""


class WindowNonconvergentError(SolverError):
    """Decay-fit window is not in the asymptotic regime (tail data unusable)."""


class SpectralSolverFailureError(SolverError):
    """Eigenvalue solve for the linearized operator did not converge."""


class QuadratureNonconvergentError(SolverError):
    """A quadrature refinement loop failed to stabilize."""


class IntegrabilityViolationError(SolverError):
    """Convolution input decays too slowly on the provided grid."""


class GridTooSmallError(SolverError):
    """3D box cannot contain the bump configuration with the required margin."""


class BoundaryContaminationError(SolverError):
    """Poisson source has not decayed at the boundary layer."""


class SolverDivergenceError(SolverError):
    """An iterative linear solve diverged or returned non-finite values."""


class GramSingularError(SolverError):
    """Tangent-space Gram matrix is numerically singular (bumps too close)."""


class ContractionFailureError(SolverError):
    """Fixed-point iteration stopped contracting (residual rose twice in a row)."""


class LinearSolverStagnationError(SolverError):
    """Inner projected-Hessian solve stagnated before reaching tolerance."""


class AllStartsInfeasibleError(SolverError):
    """No multi-start initializer satisfied the admissibility constraints."""


class FitUnstableError(SolverError):
    """Scaling-law fit rejected: R^2 below the acceptance threshold."""


class ValidationError(SolverError):
    """Run configuration violates a documented precondition."""
