"""Multivariate mean test invariant under lower-triangular scaling.

Data are i.i.d. d-variate Gaussians with unknown mean and covariance; the
hypotheses fix the standardized mean ``delta = Lambda^{-1} mu`` (Lambda the
Cholesky factor of the covariance).  The sufficient statistic reduces, via
its own Cholesky factorization, to the maximal invariant

    M = sqrt(n/(n-1)) L^{-1} mean,   with sample covariance L L'.

The likelihood ratio of M has a closed form: a Gaussian factor times the
expectation of ``exp(<gamma, T A^{-1} M>)`` over a random lower-triangular
``T`` with ``T T' ~ Wishart(n, I)``.  By the Bartlett decomposition the
entries of ``T`` are independent (chi diagonal, standard normal below), so
that expectation is a product of one-dimensional moment generating
functions -- evaluated here in log space.  ``sample_bartlett`` provides the
matching Monte Carlo oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefiniteError
from ._kernels import log_chi_mgf

__all__ = [
    "LowerTriangular",
    "LTSampleSummary",
    "LTMaxInvariant",
    "cholesky",
    "max_invariant",
    "wishart_lt_mgf",
    "log_wishart_lt_mgf",
    "sample_bartlett",
    "lr_lt",
    "log_lr_lt",
    "evalue_lt",
    "log_evalue_lt",
]


@dataclass(frozen=True)
class LowerTriangular:
    """A d x d lower-triangular matrix with strictly positive diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", e)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("entries must be a square matrix")
        if not np.allclose(e, np.tril(e), atol=0.0, rtol=0.0):
            raise ValueError("matrix has nonzero entries above the diagonal")
        if np.any(np.diag(e) <= 0.0):
            raise NotPositiveDefiniteError("diagonal must be strictly positive")

    @property
    def d(self) -> int:
        return int(self.entries.shape[0])


@dataclass(frozen=True)
class LTSampleSummary:
    """Sample size, mean vector, and unbiased covariance matrix."""

    n: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise ValueError("mean must be a d-vector and cov d x d")
        if self.n < d + 1:
            raise ValueError(f"need n >= d + 1 = {d + 1}, got n={self.n}")
        if np.max(np.abs(cov - cov.T)) > 1e-12 * max(1.0, np.max(np.abs(cov))):
            raise ValueError("covariance matrix is not symmetric")

    @property
    def d(self) -> int:
        return int(self.mean.shape[0])

    @classmethod
    def from_data(cls, x) -> "LTSampleSummary":
        x = np.asarray(x, dtype=float)
        if x.ndim != 2:
            raise ValueError("data must be an (n, d) array")
        n = x.shape[0]
        mean = x.mean(axis=0)
        dev = x - mean
        cov = dev.T @ dev / (n - 1)
        cov = 0.5 * (cov + cov.T)
        return cls(n=n, mean=mean, cov=cov)


@dataclass(frozen=True)
class LTMaxInvariant:
    """The standardized mean under the lower-triangular group."""

    m_vec: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.m_vec, dtype=float)
        object.__setattr__(self, "m_vec", v)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ValueError("m_vec must be a finite vector")

    @property
    def d(self) -> int:
        return int(self.m_vec.shape[0])


def cholesky(spd) -> LowerTriangular:
    """Cholesky factor of a symmetric positive definite matrix."""
    a = np.asarray(spd, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("input must be a square matrix")
    if np.max(np.abs(a - a.T)) > 1e-10 * max(1.0, np.max(np.abs(a))):
        raise ValueError("input matrix is not symmetric")
    try:
        ell = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc
    return LowerTriangular(entries=ell)


def _forward_solve(ell: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = ell.shape[0]
    out = np.empty(d)
    for i in range(d):
        out[i] = (b[i] - ell[i, :i] @ out[:i]) / ell[i, i]
    return out


def max_invariant(summary: LTSampleSummary) -> LTMaxInvariant:
    """sqrt(n/(n-1)) L^{-1} mean with L the Cholesky factor of the covariance."""
    ell = cholesky(summary.cov).entries
    scale = math.sqrt(summary.n / (summary.n - 1))
    return LTMaxInvariant(m_vec=scale * _forward_solve(ell, summary.mean))


def log_wishart_lt_mgf(x, y, dof: int) -> float:
    """log E[exp(<x, T y>)] for lower-triangular T with T T' ~ Wishart(dof, I).

    Product over entries: exp(a_ij^2 / 2) below the diagonal (a_ij = x_i y_j),
    chi moment generating functions with dof - i + 1 degrees of freedom on
    the diagonal.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x.shape[0]
    if y.shape != (d,):
        raise ValueError("x and y must have equal length")
    if dof < d:
        raise ValueError(f"need dof >= d = {d}, got {dof}")
    total = 0.0
    for i in range(d):
        total += float(log_chi_mgf(dof - i, x[i] * y[i]))
        a_low = x[i] * y[:i]
        total += 0.5 * float(a_low @ a_low)
    return total


def wishart_lt_mgf(x, y, dof: int) -> float:
    return math.exp(log_wishart_lt_mgf(x, y, dof))


def sample_bartlett(dof: int, d: int, rng: np.random.Generator) -> LowerTriangular:
    """One draw of the Bartlett factor: T T' ~ Wishart(dof, I).

    Diagonal entries are chi with dof - i + 1 degrees of freedom, entries
    below the diagonal standard normal, all independent.
    """
    if dof < d:
        raise ValueError(f"need dof >= d = {d}, got {dof}")
    t = np.tril(rng.standard_normal((d, d)), k=-1)
    ks = dof - np.arange(d)
    t[np.diag_indices(d)] = np.sqrt(rng.chisquare(ks))
    return LowerTriangular(entries=t)


def log_lr_lt(inv: LTMaxInvariant, n: int, delta) -> float:
    """log likelihood ratio of the maximal invariant at standardized mean
    ``delta`` against the zero-mean null.

    exp(-n ||delta||^2 / 2) E[exp(<sqrt(n) delta, T A^{-1} M>)] with
    A A' = I + M M' and T T' ~ Wishart(n, I).
    """
    delta = np.asarray(delta, dtype=float)
    d = inv.d
    if delta.shape != (d,):
        raise ValueError("delta must match the invariant's dimension")
    if n < d + 1:
        raise ValueError(f"need n >= d + 1 = {d + 1}, got {n}")
    m = inv.m_vec
    a_fac = cholesky(np.eye(d) + np.outer(m, m)).entries
    y = _forward_solve(a_fac, m)
    gamma = math.sqrt(n) * delta
    return -0.5 * n * float(delta @ delta) + log_wishart_lt_mgf(gamma, y, n)


def lr_lt(inv: LTMaxInvariant, n: int, delta) -> float:
    return math.exp(log_lr_lt(inv, n, delta))


def log_evalue_lt(summary: LTSampleSummary, delta0, delta1) -> float:
    inv = max_invariant(summary)
    return log_lr_lt(inv, summary.n, delta1) - log_lr_lt(inv, summary.n, delta0)


def evalue_lt(summary: LTSampleSummary, delta0, delta1) -> float:
    """E-value for delta1 against delta0 from the sample summary."""
    return math.exp(log_evalue_lt(summary, delta0, delta1))


def batch_log_evalue_lt(x_batch: np.ndarray, delta0, delta1) -> np.ndarray:
    """log e-values for a stack of datasets, shape (reps, n, d).

    Vectorized equivalent of ``log_evalue_lt`` over replications; used by
    the Monte Carlo suites.
    """
    x = np.asarray(x_batch, dtype=float)
    reps, n, d = x.shape
    if n < d + 1:
        raise ValueError(f"need n >= d + 1 = {d + 1}, got {n}")
    delta0 = np.asarray(delta0, dtype=float)
    delta1 = np.asarray(delta1, dtype=float)
    means = x.mean(axis=1)
    devs = x - means[:, None, :]
    covs = np.einsum("rni,rnj->rij", devs, devs) / (n - 1)
    ells = np.linalg.cholesky(covs)
    m_vecs = np.empty((reps, d))
    for i in range(d):
        m_vecs[:, i] = (means[:, i] - np.einsum("rj,rj->r", ells[:, i, :i], m_vecs[:, :i])) / ells[:, i, i]
    m_vecs *= math.sqrt(n / (n - 1))
    a_facs = np.linalg.cholesky(np.eye(d) + m_vecs[:, :, None] * m_vecs[:, None, :])
    ys = np.empty((reps, d))
    for i in range(d):
        ys[:, i] = (m_vecs[:, i] - np.einsum("rj,rj->r", a_facs[:, i, :i], ys[:, :i])) / a_facs[:, i, i]
    g1 = math.sqrt(n) * delta1
    g0 = math.sqrt(n) * delta0
    out = np.full(reps, -0.5 * n * float(delta1 @ delta1 - delta0 @ delta0))
    for i in range(d):
        out += log_chi_mgf(n - i, g1[i] * ys[:, i]) - log_chi_mgf(n - i, g0[i] * ys[:, i])
        if i > 0:
            low = ys[:, :i]
            out += 0.5 * (g1[i] ** 2 - g0[i] ** 2) * np.einsum("rj,rj->r", low, low)
    return out
