"""Exception and warning types raised by faberlab."""


class FaberLabError(Exception):
    """Base class for all library errors."""


class ParameterError(FaberLabError, ValueError):
    """An argument is outside its documented range."""


class SizingError(ParameterError):
    """Grid size is not acceptable (odd, not a power of two, too small)."""


class CuspError(FaberLabError):
    """The curve derivative vanishes on the sampled grid."""


class OrientationError(FaberLabError):
    """The curve is not a positively oriented Jordan curve."""


class DataError(FaberLabError, ValueError):
    """Sampled data contain NaN or infinite values or have the wrong shape."""


class DomainError(FaberLabError):
    """A point lies outside the domain where an evaluator is defined."""


class PoleError(DomainError):
    """Evaluation requested at the pole of a map."""


class NearBoundaryError(DomainError):
    """Off-curve evaluation too close to the curve for the quadrature rule."""


class BranchError(FaberLabError):
    """A branch of a root or power cannot be continued (zero sample)."""


class ResolutionError(BranchError):
    """Consecutive samples are too far apart to continue a branch."""


class UnsupportedCurveError(FaberLabError):
    """No conformal map construction is available for the curve."""


class AccuracyError(FaberLabError):
    """A numerical construction missed its accuracy target."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ExtractionError(AccuracyError):
    """Laurent coefficients disagree between sampling radii."""


class SingularityError(FaberLabError):
    """Evaluation at a singular point of a weight with negative exponent."""


class ConditionError(FaberLabError):
    """Problem data violate a standing condition (e.g. |A|, |B| bounded away from 0)."""


class CanonicalTraceError(FaberLabError):
    """The boundary trace of the canonical solution vanishes numerically."""


class AdmissibilityError(FaberLabError):
    """Strict mode: the weight/jump data fall outside the admissible window."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class NotATraceError(FaberLabError):
    """Data are not the boundary trace of the requested analytic class."""


class NonvanishingAtInfinityError(NotATraceError):
    """An exterior function expected to vanish at infinity does not."""


class TruncationError(ParameterError):
    """Requested truncation exceeds what the expansion stores."""


class AdmissibilityWarning(UserWarning):
    """Non-strict mode: theory no longer guarantees the result."""


class AccuracyWarning(UserWarning):
    """Result returned with reduced accuracy."""
