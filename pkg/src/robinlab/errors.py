"""Exception hierarchy shared by all robinlab modules."""


class RobinlabError(Exception):
    """Base class for all robinlab errors."""


class ValidationError(RobinlabError):
    """Bad input: violated precondition or malformed configuration."""


# -- geometry ---------------------------------------------------------------

class SingularMetric(ValidationError):
    """Metric matrix is singular or not positive definite at a point."""


class DerivativeUnavailable(ValidationError):
    """A required derivative callback is missing and finite differencing is off."""


class NotOnBoundary(ValidationError):
    """Levi curvature requested at a point with psi(t, z) != 0."""


class ZeroGradient(ValidationError):
    """grad_z psi vanishes where a Levi curvature needs it."""


# -- green ------------------------------------------------------------------

class PoleTooCloseToBoundary(ValidationError):
    """Pole violates the 3-cell interior margin."""


class NegativeC(ValidationError):
    """Coefficient field c takes a negative value."""


class NonconvergentSolver(RobinlabError):
    """Linear solver hit its iteration cap before reaching tolerance."""


class StencilOutOfRange(ValidationError):
    """Finite-difference stencil does not fit inside the sample region."""


# -- variation --------------------------------------------------------------

class GridMismatch(RobinlabError):
    """t-stencil solves disagree on the mask near the pole; refine h_t."""


# -- torus ------------------------------------------------------------------

class GcdViolation(ValidationError):
    """Six-tuple fails its coprimality or positivity constraints."""


class SearchExhausted(RobinlabError):
    """Bounded tuple-recovery search ended without a match."""


# -- lie --------------------------------------------------------------------

class DimensionMismatch(ValidationError):
    """Matrix operands have different sizes."""


class SingularLeadingMinor(ValidationError):
    """A leading principal minor is singular; the coordinate chart is undefined."""


class NotParabolic(RobinlabError):
    """Subspace is not block upper triangular for any composition."""


class StarViolation(ValidationError):
    """Lower-left block of the spanning-check matrix is identically zero."""
