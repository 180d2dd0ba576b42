"""E-statistic for a standardized linear-regression coefficient.

Model: y_i = gamma * x_i + beta' z_i + sigma * eps_i with standard Gaussian
errors; the hypotheses fix delta = gamma / sigma.  The test is invariant
under jointly rescaling the response and shifting it by any combination of
the nuisance covariates, so inference conditions on the direction of the
response's residual after projecting out the covariates:

    u = A' y / ||A' y||,

where the columns of A form an orthonormal basis of the orthogonal
complement of the covariate column space.  The density of ``u`` on the unit
sphere depends on the data only through ``a = delta * x' A u`` and has the
same confluent-hypergeometric structure as the chi moment generating
function, reused here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ZeroResidualError
from ._kernels import log_chi_mgf

__all__ = [
    "RegressionData",
    "ResidualBasis",
    "residual_basis",
    "u_statistic",
    "u_log_density",
    "evalue_regression",
    "log_evalue_regression",
]


@dataclass(frozen=True)
class RegressionData:
    """Response y, regressor of interest x, nuisance covariates z (n x d)."""

    y: np.ndarray
    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        z = np.asarray(self.z, dtype=float)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        if z.ndim != 2:
            raise ValueError("covariates must form an (n, d) matrix")
        n, d = z.shape
        if y.shape != (n,) or x.shape != (n,):
            raise ValueError("y and x must be n-vectors matching the covariate rows")
        if n < d + 2:
            raise ValueError(f"need n >= d + 2 = {d + 2}, got n={n}")
        if np.linalg.matrix_rank(z) < d:
            raise ValueError("covariate matrix is rank deficient")

    @property
    def n(self) -> int:
        return int(self.z.shape[0])

    @property
    def d(self) -> int:
        return int(self.z.shape[1])


@dataclass(frozen=True)
class ResidualBasis:
    """n x (n-d) matrix with orthonormal columns spanning the residual space."""

    a_mat: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_mat, dtype=float)
        object.__setattr__(self, "a_mat", a)
        if a.ndim != 2 or a.shape[0] <= a.shape[1]:
            raise ValueError("basis must be n x (n-d) with n > n-d")
        gram = a.T @ a
        if np.max(np.abs(gram - np.eye(a.shape[1]))) > 1e-12:
            raise ValueError("basis columns are not orthonormal")


def residual_basis(z_mat) -> ResidualBasis:
    """Orthonormal basis of the orthogonal complement of the column space.

    Satisfies A'A = I and AA' = I - Z (Z'Z)^{-1} Z'.  Column signs follow a
    fixed convention (first entry of sizable magnitude positive) so repeated
    runs produce identical matrices.
    """
    z = np.asarray(z_mat, dtype=float)
    if z.ndim != 2:
        raise ValueError("covariates must form an (n, d) matrix")
    n, d = z.shape
    a = linalg.null_space(z.T)
    if a.shape != (n, n - d):
        raise ValueError(f"covariate matrix is rank deficient (rank {n - a.shape[1]} < {d})")
    for j in range(a.shape[1]):
        col = a[:, j]
        lead = col[np.argmax(np.abs(col))]
        if lead < 0:
            a[:, j] = -col
    return ResidualBasis(a_mat=a)


def u_statistic(data: RegressionData, basis: ResidualBasis) -> np.ndarray:
    """Unit residual direction A'y / ||A'y||."""
    proj = basis.a_mat.T @ data.y
    norm = float(np.linalg.norm(proj))
    if norm <= 1e-10 * max(1.0, float(np.linalg.norm(data.y))):
        raise ZeroResidualError("response lies in the covariate column space")
    return proj / norm


def u_log_density(u, delta: float, data: RegressionData, basis: ResidualBasis) -> float:
    """Log density of the residual direction on the unit sphere S^{k-1}, k = n-d.

    (1/2) Gamma(k/2) pi^{-k/2} e^{c}  E[e^{aX}],  X ~ chi(k),
    with a = delta * x'Au and c = -delta^2 ||A'x||^2 / 2; at delta = 0 this
    is the uniform density on the sphere.
    """
    u = np.asarray(u, dtype=float)
    k = data.n - data.d
    if u.shape != (k,):
        raise ValueError(f"direction must live in R^{k}")
    if abs(float(u @ u) - 1.0) > 1e-10:
        raise ValueError("direction must be a unit vector")
    a_mat = basis.a_mat
    a_val = delta * float(data.x @ (a_mat @ u))
    proj_x = a_mat.T @ data.x
    c_val = -0.5 * delta * delta * float(proj_x @ proj_x)
    log_uniform = math.lgamma(0.5 * k) - math.log(2.0) - 0.5 * k * math.log(math.pi)
    return log_uniform + c_val + float(log_chi_mgf(k, a_val))


def log_evalue_regression(data: RegressionData, delta0: float, delta1: float,
                          basis: ResidualBasis | None = None) -> float:
    basis = basis or residual_basis(data.z)
    u = u_statistic(data, basis)
    return (u_log_density(u, delta1, data, basis)
            - u_log_density(u, delta0, data, basis))


def evalue_regression(data: RegressionData, delta0: float, delta1: float) -> float:
    """E-value for delta1 against delta0, conditioning on (x, z)."""
    return math.exp(log_evalue_regression(data, delta0, delta1))
