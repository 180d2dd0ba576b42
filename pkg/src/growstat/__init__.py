"""Growth-optimal e-statistics for group-invariant hypothesis tests.

Likelihood ratios of maximal invariants for the scale-invariant t-test, the
lower-triangular multivariate mean test, and the standardized regression
coefficient test; a sequential anytime-valid engine; an exact finite-group
laboratory for the underlying KL duality; and Monte Carlo / quadrature
verification suites.
"""

__version__ = "0.1.0"

from .errors import (
    GrowstatError,
    NonConvergenceError,
    DegenerateSampleError,
    AbsoluteContinuityError,
    NotPositiveDefiniteError,
    ZeroResidualError,
    NoSignChangeError,
    MaxIterationsError,
)

__all__ = [
    "__version__",
    "GrowstatError",
    "NonConvergenceError",
    "DegenerateSampleError",
    "AbsoluteContinuityError",
    "NotPositiveDefiniteError",
    "ZeroResidualError",
    "NoSignChangeError",
    "MaxIterationsError",
]
