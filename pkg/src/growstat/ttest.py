"""Scale-invariant one-sample t-test e-statistics.

Tests ``H0: mu/sigma = delta0`` against ``H1: mu/sigma = delta1`` for i.i.d.
Gaussian data with both mean and scale unknown.  The optimal e-statistic is
the likelihood ratio of a maximal invariant under rescaling, available here
through two independent numerical routes:

* ``evalue_haar``      -- ratio of scale-mixture integrals, evaluated by
  log-space Gauss-Legendre quadrature over log(sigma);
* ``evalue_noncentral_t`` -- ratio of noncentral-t densities of the
  t-statistic, evaluated through the chi moment generating function.

The two agree to many digits; the test suite exploits that as a cross-check.
``mixture_evalue`` integrates the simple-alternative e-statistic against a
centered normal prior on the effect size (a Bayes-factor construction whose
two-observation case has the closed form ``t2_closed_form``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DegenerateSampleError, NonConvergenceError
from ._kernels import log_chi_mgf

__all__ = [
    "TTestHypotheses",
    "TSufficientStats",
    "HaarQuadrature",
    "t_statistic",
    "evalue_haar",
    "noncentral_t_logpdf",
    "evalue_noncentral_t",
    "log_evalue_from_moments",
    "mixture_evalue",
    "mixture_evalue_from_moments",
    "t2_closed_form",
    "truncated_haar_kl",
    "truncated_haar_kl_curve",
]

_LN_2PI = math.log(2.0 * math.pi)
_DROP = 40.0


@dataclass(frozen=True)
class TTestHypotheses:
    """Effect sizes mu/sigma under the null and the alternative."""

    delta0: float
    delta1: float

    def __post_init__(self):
        if not (math.isfinite(self.delta0) and math.isfinite(self.delta1)):
            raise ValueError("effect sizes must be finite")


@dataclass
class TSufficientStats:
    """Running sufficient statistics (n, mean, sum of squared deviations).

    ``push`` performs a Welford update, O(1) per observation.
    """

    n: int = 0
    mean: float = 0.0
    sum_sq_dev: float = 0.0

    @classmethod
    def from_data(cls, data) -> "TSufficientStats":
        x = np.asarray(data, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise ValueError("data must be a non-empty 1-d sequence")
        m = float(x.mean())
        return cls(n=x.size, mean=m, sum_sq_dev=float(((x - m) ** 2).sum()))

    def push(self, x: float) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.sum_sq_dev += delta * (x - self.mean)

    def copy(self) -> "TSufficientStats":
        return TSufficientStats(self.n, self.mean, self.sum_sq_dev)


def _default_nodes(node_count: int):
    return np.polynomial.legendre.leggauss(node_count)


@dataclass(frozen=True)
class HaarQuadrature:
    """Gauss-Legendre reference rule for integration over log(sigma).

    The rule lives on [-1, 1]; each integral maps it affinely onto a window
    around the integrand's peak, chosen so the truncated tails are below
    e^-40 of the peak value.
    """

    nodes: np.ndarray = field(default_factory=lambda: _default_nodes(96)[0])
    weights: np.ndarray = field(default_factory=lambda: _default_nodes(96)[1])

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-d and congruent")
        if not np.all(self.weights > 0):
            raise ValueError("quadrature weights must be positive")

    @property
    def node_count(self) -> int:
        return int(self.nodes.size)

    @classmethod
    def with_nodes(cls, node_count: int) -> "HaarQuadrature":
        n, w = _default_nodes(node_count)
        return cls(nodes=n, weights=w)


_DEFAULT_QUAD = HaarQuadrature()


def t_statistic(stats: TSufficientStats) -> float:
    """t = sqrt(n) * mean / s with s^2 = sum_sq_dev / (n - 1)."""
    if stats.n < 2:
        raise ValueError(f"need at least two observations, got n={stats.n}")
    if stats.sum_sq_dev <= 0.0:
        raise DegenerateSampleError("sample has zero variance")
    s = math.sqrt(stats.sum_sq_dev / (stats.n - 1))
    return math.sqrt(stats.n) * stats.mean / s


# ---------------------------------------------------------------------------
# Haar-integral route
# ---------------------------------------------------------------------------

def _haar_log_integrand(n, xbar, vbar, delta, u):
    # log of sigma^{-n-1} exp(-(n/2)[(xbar/sigma - delta)^2 + vbar/sigma^2]),
    # after sigma = e^u (the e^u Jacobian absorbed); delta-free constants dropped
    w = np.exp(-u)
    return -n * u - 0.5 * n * ((xbar * w - delta) ** 2 + vbar * w * w)


def log_haar_numerator(n, xbar, vbar, delta, quad: HaarQuadrature = _DEFAULT_QUAD):
    """log of the sigma-integral for one effect size, up to delta-free constants.

    Vectorized over ``xbar``/``vbar``; the peak of the log-integrand has a
    closed form, the truncation window is found by bisection.
    """
    xbar = np.asarray(xbar, dtype=float)
    vbar = np.asarray(vbar, dtype=float)
    scalar = xbar.ndim == 0
    xbar = np.atleast_1d(xbar)
    vbar = np.atleast_1d(vbar)
    amp = xbar * xbar + vbar
    if np.any(amp <= 0.0):
        raise DegenerateSampleError("all observations are zero")
    # peak: A w^2 - delta*xbar*w - 1 = 0 in w = 1/sigma, subtraction-free form
    bmix = delta * xbar
    disc = np.sqrt(bmix * bmix + 4.0 * amp)
    w_star = np.where(bmix >= 0.0, (bmix + disc) / (2.0 * amp), 2.0 / (disc - bmix))
    u_star = -np.log(w_star)
    f_star = _haar_log_integrand(n, xbar, vbar, delta, u_star)
    target = f_star - _DROP

    def drop(side):
        hi = np.ones_like(u_star)
        for _ in range(42):
            need = _haar_log_integrand(n, xbar, vbar, delta, u_star + side * hi) > target
            if not need.any():
                break
            hi = np.where(need, 2.0 * hi, hi)
        lo = np.zeros_like(hi)
        for _ in range(22):
            mid = 0.5 * (lo + hi)
            above = _haar_log_integrand(n, xbar, vbar, delta, u_star + side * mid) > target
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        return hi

    with np.errstate(over="ignore", invalid="ignore"):
        dl, dr = drop(-1.0), drop(+1.0)
    fpp = n * w_star * (2.0 * amp * w_star - bmix)
    sig = 1.0 / np.sqrt(fpp)
    u_lo = u_star - dl
    u_hi = u_star + dr
    u_mid = u_star + np.minimum(2.0 * sig, 0.5 * dr)  # the slow (linear) tail is on the right
    out = np.full(xbar.shape, -np.inf)
    ln_w = np.log(quad.weights)
    for lo, hi in ((u_lo, u_mid), (u_mid, u_hi)):
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        us = c[..., None] + h[..., None] * quad.nodes
        vals = (_haar_log_integrand(n, xbar[..., None], vbar[..., None], delta, us)
                + np.log(h)[..., None] + ln_w)
        m = vals.max(axis=-1)
        out = np.logaddexp(out, m + np.log(np.exp(vals - m[..., None]).sum(axis=-1)))
    return float(out[0]) if scalar else out


def evalue_haar(data, hyp: TTestHypotheses, quad: HaarQuadrature = _DEFAULT_QUAD) -> float:
    """E-value as the ratio of right-Haar scale mixtures of the likelihood."""
    x = np.asarray(data, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError(f"need at least two observations, got shape {x.shape}")
    if not np.any(x != 0.0):
        raise DegenerateSampleError("all observations are zero")
    n = x.size
    xbar = float(x.mean())
    vbar = float(((x - xbar) ** 2).mean())
    num = log_haar_numerator(n, xbar, vbar, hyp.delta1, quad)
    den = log_haar_numerator(n, xbar, vbar, hyp.delta0, quad)
    return math.exp(num - den)


# ---------------------------------------------------------------------------
# noncentral-t route
# ---------------------------------------------------------------------------

def noncentral_t_logpdf(t, df: int, noncentrality: float):
    """Log density of the noncentral t distribution, vectorized over t.

    Evaluated through the chi moment generating function:
    f(t) = C(df) e^{-lam^2/2} (df+t^2)^{-(df+1)/2} E[e^{aX}],
    X ~ chi(df+1), a = lam*t/sqrt(df+t^2).
    """
    if not isinstance(df, (int, np.integer)) or df < 1:
        raise ValueError(f"degrees of freedom must be a positive integer, got {df!r}")
    lam = float(noncentrality)
    t_arr = np.asarray(t, dtype=float)
    a = lam * t_arr / np.sqrt(df + t_arr * t_arr)
    const = (0.5 * df * math.log(df) + math.lgamma(0.5 * (df + 1)) - math.lgamma(0.5 * df)
             - 0.5 * math.log(math.pi) - 0.5 * lam * lam)
    out = const - 0.5 * (df + 1) * np.log(df + t_arr * t_arr) + log_chi_mgf(df + 1, a)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def evalue_noncentral_t(stats: TSufficientStats, hyp: TTestHypotheses) -> float:
    """E-value as the noncentral-t density ratio at the observed t-statistic."""
    t = t_statistic(stats)
    df = stats.n - 1
    lam1 = math.sqrt(stats.n) * hyp.delta1
    lam0 = math.sqrt(stats.n) * hyp.delta0
    return math.exp(noncentral_t_logpdf(t, df, lam1) - noncentral_t_logpdf(t, df, lam0))


def log_evalue_from_moments(n: int, xbar, vbar, delta0: float, delta1: float):
    """log e-value from (n, mean, mean squared deviation), vectorized.

    Valid for any n >= 1 with ``xbar^2 + vbar > 0``; at n = 1 this reduces to
    the likelihood ratio of the observation's sign.  This is the fast path
    used by the sequential engine and the Monte Carlo suites.
    """
    xbar = np.asarray(xbar, dtype=float)
    vbar = np.asarray(vbar, dtype=float)
    amp = xbar * xbar + vbar
    if np.any(amp <= 0.0):
        raise DegenerateSampleError("all observations are zero")
    root = np.sqrt(n) * xbar / np.sqrt(amp)
    out = np.asarray(-0.5 * n * (delta1 * delta1 - delta0 * delta0)
                     + log_chi_mgf(n, delta1 * root) - log_chi_mgf(n, delta0 * root))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# normal-prior mixture over the effect size
# ---------------------------------------------------------------------------

def mixture_evalue(data, kappa: float, rel_tol: float = 1e-10) -> float:
    """Integral of the simple-alternative e-value against a N(0, kappa^2) prior.

    The null fixes the effect size at zero.  Adaptive quadrature over the
    effect size; the integrand peak is rescaled out so wide priors
    (kappa >> data scale) and narrow ones are both handled.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"need at least one observation, got shape {x.shape}")
    xbar = float(x.mean())
    vbar = float(((x - xbar) ** 2).mean())
    return mixture_evalue_from_moments(x.size, xbar, vbar, kappa, rel_tol)


def mixture_evalue_from_moments(n: int, xbar: float, vbar: float, kappa: float,
                                rel_tol: float = 1e-10) -> float:
    """``mixture_evalue`` from the sufficient statistics (n, mean, mean
    squared deviation) instead of raw data."""
    if not kappa > 0:
        raise ValueError(f"prior scale must be positive, got {kappa!r}")
    if n < 1:
        raise ValueError(f"need at least one observation, got n={n}")
    if xbar * xbar + vbar <= 0.0:
        raise DegenerateSampleError("all observations are zero")

    def log_f(d):
        return (-0.5 * d * d / kappa**2 - 0.5 * math.log(2 * math.pi * kappa**2)
                + log_evalue_from_moments(n, xbar, vbar, 0.0, d))

    # crude effect-size estimate locating the integrand's data-driven feature
    if vbar > 0:
        d_hat = abs(xbar) / math.sqrt(vbar)
    else:
        d_hat = abs(xbar) * math.sqrt(n)
    d_hat = min(d_hat, 1e3)
    span = min(40.0 * kappa, 40.0 * kappa + 2.0 * d_hat) + 2.0 * d_hat + 10.0
    probe = np.concatenate([
        np.linspace(-span, span, 201),
        np.linspace(-2 * d_hat - 5, 2 * d_hat + 5, 101),
    ])
    shift = max(log_f(float(d)) for d in probe)

    def f(d):
        return math.exp(log_f(d) - shift)

    # adaptive quadrature must not see a narrow feature inside an interval
    # orders of magnitude wider, or its error estimate is unreliable; nest
    # windows at the prior scale, the data scale, and the full span
    core = min(span, max(60.0, 30.0 * (1.0 + d_hat)))
    bounds = sorted({min(40.0 * kappa, core), core, span})
    inner = bounds[0]
    points = sorted({p for p in (-d_hat, 0.0, d_hat) if -inner < p < inner})
    val, err = integrate.quad(f, -inner, inner, points=points or None,
                              epsabs=1e-13, epsrel=rel_tol * 1e-1, limit=400)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi > lo:
            for sgn in (1.0, -1.0):
                v, e = integrate.quad(f, min(sgn * lo, sgn * hi), max(sgn * lo, sgn * hi),
                                      epsabs=max(1e-13, err), epsrel=rel_tol * 1e-1,
                                      limit=400)
                val += v
                err += e
    if not np.isfinite(val) or val <= 0.0 or err > max(rel_tol * val, 1e-12):
        raise NonConvergenceError(
            f"mixture quadrature failed: value={val!r}, abserr={err!r}")
    return math.exp(shift) * val


def t2_closed_form(x1: float, x2: float, kappa: float) -> float:
    """Two-observation closed form of ``mixture_evalue``.

    sqrt(2 kappa^2 + 1) (x1^2 + x2^2) / (kappa^2 (x1 - x2)^2 + x1^2 + x2^2).
    """
    if not kappa > 0:
        raise ValueError(f"prior scale must be positive, got {kappa!r}")
    s2 = x1 * x1 + x2 * x2
    if s2 == 0.0:
        raise DegenerateSampleError("undefined at the origin")
    return math.sqrt(2.0 * kappa**2 + 1.0) * s2 / (kappa**2 * (x1 - x2) ** 2 + s2)


# ---------------------------------------------------------------------------
# truncated-Haar prior mixtures: the KL convergence probe
# ---------------------------------------------------------------------------

def _log_truncated_mixture_density(x_mat: np.ndarray, log_c: float, delta: float,
                                   quad: HaarQuadrature) -> np.ndarray:
    """Log density of data under sigma ~ (truncated right Haar on [1/c, c])."""
    n = x_mat.shape[1]
    u = log_c * quad.nodes
    w = np.exp(-u)
    out = np.empty(x_mat.shape[0])
    step = max(1, (1 << 22) // (n * quad.node_count))
    base = np.log(quad.weights * log_c) - math.log(2.0 * log_c) - 0.5 * n * _LN_2PI - n * u
    for start in range(0, x_mat.shape[0], step):
        xb = x_mat[start:start + step]
        dev = xb[:, :, None] * w[None, None, :] - delta
        ll = base[None, :] - 0.5 * (dev * dev).sum(axis=1)
        m = ll.max(axis=1)
        out[start:start + step] = m + np.log(np.exp(ll - m[:, None]).sum(axis=1))
    return out


def truncated_haar_kl_curve(c_values, hyp: TTestHypotheses, n: int, mc_samples: int,
                            seed: int, quad: HaarQuadrature | None = None):
    """KL(mixture under delta1, mixture under delta0) for several truncation
    levels c, sharing one set of random draws (common random numbers).

    Returns a list of (estimate, standard_error), one pair per c.
    """
    if n not in (2, 3):
        raise ValueError(f"supported sample sizes are 2 and 3, got {n!r}")
    if mc_samples < 100:
        raise ValueError("need at least 100 Monte Carlo samples")
    for c in c_values:
        if not c > 1:
            raise ValueError(f"truncation level must exceed 1, got {c!r}")
    quad = quad or HaarQuadrature.with_nodes(256)
    rng = np.random.default_rng(seed)
    u01 = rng.uniform(-1.0, 1.0, mc_samples)
    z = rng.standard_normal((mc_samples, n))
    out = []
    for c in c_values:
        log_c = math.log(c)
        sigma = np.exp(u01 * log_c)
        x = sigma[:, None] * (hyp.delta1 + z)
        lq = _log_truncated_mixture_density(x, log_c, hyp.delta1, quad)
        lp = _log_truncated_mixture_density(x, log_c, hyp.delta0, quad)
        vals = lq - lp
        if not np.all(np.isfinite(vals)):
            raise NonConvergenceError("non-finite log ratio in KL Monte Carlo")
        se = float(vals.std(ddof=1) / math.sqrt(mc_samples))
        out.append((float(vals.mean()), se))
    return out


def truncated_haar_kl(c: float, hyp: TTestHypotheses, n: int, mc_samples: int,
                      seed: int) -> float:
    """Monte Carlo KL divergence between truncated-Haar mixtures (single c)."""
    return truncated_haar_kl_curve([c], hyp, n, mc_samples, seed)[0][0]
