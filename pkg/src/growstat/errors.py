"""Exception types shared across the package."""


class GrowstatError(Exception):
    """Base class for all package errors."""


class NonConvergenceError(GrowstatError):
    """A series or quadrature failed to reach the requested tolerance."""


class DegenerateSampleError(GrowstatError, ValueError):
    """The data carry no usable invariant information (e.g. zero variance)."""


class AbsoluteContinuityError(GrowstatError, ValueError):
    """A density ratio was requested where the denominator vanishes."""


class NotPositiveDefiniteError(GrowstatError, ValueError):
    """A matrix required to be positive definite is not."""


class ZeroResidualError(GrowstatError, ValueError):
    """The response lies in the span of the nuisance covariates."""


class NoSignChangeError(GrowstatError, ValueError):
    """Root bracketing failed: the function does not change sign."""


class MaxIterationsError(GrowstatError):
    """An iterative optimizer hit its iteration cap.

    Carries the best iterate found so far in ``priors`` and ``value``.
    """

    def __init__(self, message, priors=None, value=None):
        super().__init__(message)
        self.priors = priors
        self.value = value
