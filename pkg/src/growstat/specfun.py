"""Special functions backing the closed-form invariant likelihood ratios.

The chi moment generating function is the workhorse: for ``X`` chi-distributed
with ``k`` degrees of freedom,

    E[e^{aX}] = 1F1(k/2, 1/2, a^2/2)
                + sqrt(2) a Gamma((k+1)/2)/Gamma(k/2) 1F1((k+1)/2, 3/2, a^2/2)

for ``a >= 0``, and

    E[e^{aX}] = Gamma(k) / (2^{k-1} Gamma(k/2)) * U(k/2, 1/2, a^2/2)

for ``a < 0``, with ``U`` Kummer's function of the second kind.  ``chi_mgf``
below is the scalar reference implementation of exactly these formulas;
``log_chi_mgf`` (from :mod:`growstat._kernels`) is the fast, vectorized,
log-space equivalent used on hot paths.  The two are tied together by tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import NonConvergenceError
from ._kernels import log_chi_mgf  # noqa: F401  (re-exported)

__all__ = [
    "EvalPolicy",
    "DEFAULT_POLICY",
    "ln_gamma",
    "ln_multivariate_gamma",
    "kummer_m",
    "kummer_u",
    "chi_mgf",
    "log_chi_mgf",
]


@dataclass(frozen=True)
class EvalPolicy:
    """Truncation and branch-switch policy for series evaluation.

    rel_tol:   stop summing when the current term falls below rel_tol times
               the partial sum
    max_terms: hard cap on the number of series terms
    switch_z:  argument above which the ascending series is abandoned for
               the large-z asymptotic expansion
    """

    rel_tol: float = 1e-15
    max_terms: int = 10_000
    switch_z: float = 50.0

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")
        if not self.switch_z > 0:
            raise ValueError("switch_z must be positive")


DEFAULT_POLICY = EvalPolicy()


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if not x > 0:
        raise ValueError(f"ln_gamma requires x > 0, got {x!r}")
    return float(special.gammaln(x))


def ln_multivariate_gamma(d: int, a: float) -> float:
    """ln Gamma_d(a) = (d(d-1)/4) ln pi + sum_{i=1..d} ln Gamma(a - (i-1)/2)."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d!r}")
    if not a > (d - 1) / 2:
        raise ValueError(f"need a > (d-1)/2 = {(d - 1) / 2}, got {a!r}")
    out = d * (d - 1) / 4 * math.log(math.pi)
    for i in range(1, d + 1):
        out += ln_gamma(a - (i - 1) / 2)
    return out


def _kummer_m_series(a: float, b: float, z: float, policy: EvalPolicy) -> float:
    s = 1.0
    t = 1.0
    for j in range(policy.max_terms):
        t *= (a + j) * z / ((b + j) * (j + 1.0))
        s += t
        if abs(t) <= policy.rel_tol * abs(s):
            return s
    raise NonConvergenceError(
        f"Kummer series did not converge in {policy.max_terms} terms (a={a}, b={b}, z={z})"
    )


def _kummer_m_asymptotic(a: float, b: float, z: float, policy: EvalPolicy) -> float:
    # 1F1(a,b,z) ~ Gamma(b)/Gamma(a) e^z z^{a-b} sum_s (b-a)_s (1-a)_s / (s! z^s)
    p1 = b - a
    p2 = 1.0 - a
    terminating = (p1 <= 0 and p1 == round(p1)) or (p2 <= 0 and p2 == round(p2))
    s = 1.0
    t = 1.0
    best = 1.0
    converged = terminating
    for j in range(policy.max_terms):
        f = (p1 + j) * (p2 + j)
        if f == 0.0:
            break
        t *= f / ((j + 1.0) * z)
        if not terminating and abs(t) >= best:
            # divergent expansion started growing: truncate at the smallest term
            break
        best = min(best, abs(t))
        s += t
        if abs(t) <= policy.rel_tol * abs(s):
            converged = True
            break
    if not converged and best > policy.rel_tol * abs(s):
        raise NonConvergenceError(
            f"asymptotic Kummer expansion stalled at relative error {best / abs(s):.3g} "
            f"(a={a}, b={b}, z={z})"
        )
    sign = float(special.gammasgn(b) * special.gammasgn(a))
    lead = special.gammaln(b) - special.gammaln(a) + z + (a - b) * math.log(z)
    return sign * math.exp(lead) * s


def kummer_m(a: float, b: float, z: float, policy: EvalPolicy | None = None) -> float:
    """Confluent hypergeometric function 1F1(a, b, z) for z >= 0.

    Ascending series up to ``policy.switch_z``, large-z asymptotics beyond.
    """
    policy = policy or DEFAULT_POLICY
    if b <= 0 and b == round(b):
        raise ValueError(f"b must not be a non-positive integer, got {b!r}")
    if z < 0:
        raise ValueError(f"only z >= 0 is supported, got {z!r}")
    if z == 0:
        return 1.0
    if z <= policy.switch_z:
        return _kummer_m_series(a, b, z, policy)
    return _kummer_m_asymptotic(a, b, z, policy)


def _log_kummer_u(a: float, b: float, z: float, rel_tol: float = 1e-10) -> float:
    if not a > 0:
        raise ValueError(f"integral representation requires a > 0, got {a!r}")
    if not z > 0:
        raise ValueError(f"requires z > 0, got {z!r}")
    e = b - a - 1.0

    def log_integrand(t: float) -> float:
        return (a - 1.0) * math.log(t) - z * t + e * math.log1p(t)

    # interior stationary point of the log-integrand, if any
    disc = (z - b + 2.0) ** 2 + 4.0 * z * (a - 1.0)
    t_peak = 0.0
    if disc >= 0.0:
        t_peak = max(0.0, (-(z - b + 2.0) + math.sqrt(disc)) / (2.0 * z))
    shift = log_integrand(t_peak) if t_peak > 0 else 0.0
    shift = max(shift, log_integrand(1.0))

    # substitute t = s^p on [0,1) so the integrand vanishes algebraically at 0
    p = max(1, math.ceil(1.0 / a))

    def head(s: float) -> float:
        if s == 0.0:
            return 0.0 if p * a > 1.0 else p * math.exp(-shift)
        t = s**p
        return p * math.exp((p * a - 1.0) * math.log(s) - z * t + e * math.log1p(t) - shift)


    def tail_log(v: float) -> float:
        # t = e^v; absorbs the slow algebraic tail that appears for small z
        t = math.exp(v)
        return math.exp(a * v - z * t + e * math.log1p(t) - shift)

    v1, e1 = integrate.quad(head, 0.0, 1.0, epsabs=0.0, epsrel=rel_tol * 1e-2, limit=200)
    v_hi = max(math.log(max(t_peak, 1.0)) + 5.0, math.log((a + abs(e) + 80.0) / z) + 5.0)
    pts = [math.log(t_peak)] if t_peak > 1.5 else None
    v2, e2 = integrate.quad(tail_log, 0.0, v_hi, points=pts,
                            epsabs=abs(e1) + 1e-300, epsrel=rel_tol * 1e-2, limit=300)
    total = v1 + v2
    err = e1 + e2
    if not np.isfinite(total) or total <= 0.0 or err > rel_tol * total:
        raise NonConvergenceError(
            f"U integral failed: value={total!r}, abserr={err!r} (a={a}, b={b}, z={z})"
        )
    return shift + math.log(total) - float(special.gammaln(a))


def kummer_u(a: float, b: float, z: float, rel_tol: float = 1e-10) -> float:
    """Kummer's U(a, b, z) for a > 0, z > 0 via its integral representation.

    U(a,b,z) = (1/Gamma(a)) int_0^inf e^{-zt} t^{a-1} (1+t)^{b-a-1} dt,
    evaluated by adaptive quadrature in log scale (the integrand is shifted
    by its peak value before integration).
    """
    return math.exp(_log_kummer_u(a, b, z, rel_tol))


def chi_mgf(k: int, a: float, policy: EvalPolicy | None = None) -> float:
    """E[e^{aX}] for X chi-distributed with k degrees of freedom.

    Scalar reference path: Kummer-series combination for a >= 0, Kummer-U
    branch for a < 0.  For bulk evaluation use :func:`log_chi_mgf`.
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"degrees of freedom must be a positive integer, got {k!r}")
    a = float(a)
    if a == 0.0:
        return 1.0
    z = 0.5 * a * a
    if a > 0:
        m1 = kummer_m(0.5 * k, 0.5, z, policy)
        m2 = kummer_m(0.5 * (k + 1), 1.5, z, policy)
        coef = math.sqrt(2.0) * math.exp(special.gammaln(0.5 * (k + 1)) - special.gammaln(0.5 * k))
        return m1 + coef * a * m2
    log_c = special.gammaln(k) - (k - 1) * math.log(2.0) - special.gammaln(0.5 * k)
    return math.exp(log_c + _log_kummer_u(0.5 * k, 0.5, z))
