"""Hot numeric kernel: the log moment generating function of a chi variable.

``log_chi_mgf(k, a)`` returns ``ln E[exp(a*X)]`` for ``X`` chi-distributed
with ``k`` degrees of freedom, elementwise over ``a``.  Every likelihood
ratio in this package bottoms out here, and the Monte Carlo suites call it
on arrays with ~1e7 entries, so two interchangeable backends are provided:

* ``numba`` -- scalar loops compiled with ``@njit`` (default when numba
  imports cleanly);
* ``numpy`` -- chunked vectorized arrays, no compilation.

Select with the ``GROWSTAT_BACKEND`` environment variable ("numba" or
"numpy").  ``benchmarks/bench_backends.py`` times one against the other.

Evaluation strategy per element (k is a positive integer):

* ``a == 0``: exactly 0.
* ``a > 0`` and ``z = a^2/2 <= 50`` (and k moderate): ascending Kummer
  series of ``1F1(k/2, 1/2, z)`` and ``1F1((k+1)/2, 3/2, z)``; every term
  is positive, so the sum is cancellation-free.
* ``a > 0`` and ``z > 50``: the large-z asymptotic expansion.  For integer
  k both expansions terminate with positive terms and the neglected
  second-solution piece is O(e^{-z}), far below double precision.
* ``a < 0`` or very large k: Gauss-Legendre quadrature of
  ``int_0^inf x^{k-1} exp(-x^2/2 + a*x) dx`` after the substitution
  ``x = e^y``, under which the integrand is unimodal with a closed-form
  peak; the domain is truncated where the log-integrand drops 40 below
  its maximum.
"""

from __future__ import annotations

import math
import os

import numpy as np

SWITCH_Z = 50.0
SERIES_MAX_K = 400
DROP = 40.0
_CHUNK = 1 << 15

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)
_LN_GL_WEIGHTS = np.log(_GL_WEIGHTS)
_LG_HALF = math.lgamma(0.5)
_LG_3HALF = math.lgamma(1.5)
_LN2 = math.log(2.0)
_SQRT2 = math.sqrt(2.0)


def _select_backend() -> str:
    choice = os.environ.get("GROWSTAT_BACKEND", "").strip().lower()
    if choice not in ("", "numba", "numpy"):
        raise ValueError(f"GROWSTAT_BACKEND must be 'numba' or 'numpy', got {choice!r}")
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _select_backend()


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _ascending_1f1_np(aa: float, bb: float, z: np.ndarray) -> np.ndarray:
    s = np.ones_like(z)
    t = np.ones_like(z)
    for j in range(4000):
        t = t * ((aa + j) / ((bb + j) * (j + 1.0))) * z
        s = s + t
        if np.all(t <= 1e-17 * s):
            break
    return s


def _series_log_np(k: int, a: np.ndarray) -> np.ndarray:
    z = 0.5 * a * a
    f1 = _ascending_1f1_np(0.5 * k, 0.5, z)
    f2 = _ascending_1f1_np(0.5 * (k + 1), 1.5, z)
    coef = _SQRT2 * math.exp(math.lgamma(0.5 * (k + 1)) - math.lgamma(0.5 * k))
    return np.log(f1 + coef * a * f2)


def _asym_series_np(aa: float, bb: float, z: np.ndarray) -> np.ndarray:
    # sum_s (bb-aa)_s (1-aa)_s / (s! z^s); terminates for half-integer input
    s = np.ones_like(z)
    t = np.ones_like(z)
    p1 = bb - aa
    p2 = 1.0 - aa
    for j in range(2 * SERIES_MAX_K + 4):
        f = (p1 + j) * (p2 + j)
        if f == 0.0:
            break
        t = t * (f / (j + 1.0)) / z
        s = s + t
        if np.all(np.abs(t) <= 1e-18 * s):
            break
    return s


def _asym_log_np(k: int, a: np.ndarray) -> np.ndarray:
    z = 0.5 * a * a
    lz = np.log(z)
    s1 = _asym_series_np(0.5 * k, 0.5, z)
    s2 = _asym_series_np(0.5 * (k + 1), 1.5, z)
    lt1 = _LG_HALF - math.lgamma(0.5 * k) + z + (0.5 * k - 0.5) * lz + np.log(s1)
    lt2 = (np.log(_SQRT2 * a) + _LG_3HALF - math.lgamma(0.5 * k)
           + z + (0.5 * k - 1.0) * lz + np.log(s2))
    return np.logaddexp(lt1, lt2)


def _logint_np(kk: float, a, y):
    w = np.exp(y)
    return kk * y - 0.5 * w * w + a * w


def _drop_distance_np(kk: float, a: np.ndarray, y_star: np.ndarray,
                      target: np.ndarray, side: float) -> np.ndarray:
    hi = np.ones_like(a)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(42):
            need = _logint_np(kk, a, y_star + side * hi) > target
            if not need.any():
                break
            hi = np.where(need, 2.0 * hi, hi)
        lo = np.zeros_like(a)
        for _ in range(22):
            mid = 0.5 * (lo + hi)
            above = _logint_np(kk, a, y_star + side * mid) > target
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
    return hi


def _quad_log_np(k: int, a: np.ndarray) -> np.ndarray:
    kk = float(k)
    disc = np.sqrt(a * a + 4.0 * kk)
    # peak of the log-integrand in y-space; subtraction-free for a < 0
    w_star = np.where(a >= 0.0, 0.5 * (a + disc), 2.0 * kk / (disc - a))
    y_star = np.log(w_star)
    f_star = _logint_np(kk, a, y_star)
    target = f_star - DROP
    dl = _drop_distance_np(kk, a, y_star, target, -1.0)
    dr = _drop_distance_np(kk, a, y_star, target, +1.0)
    sig = 1.0 / np.sqrt(w_star * disc)
    y_lo = y_star - dl
    y_hi = y_star + dr
    y_mid = y_star - np.minimum(2.0 * sig, 0.5 * dl)
    out = np.full(a.shape, -np.inf)
    for lo, hi in ((y_lo, y_mid), (y_mid, y_hi)):
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        ys = c[:, None] + h[:, None] * _GL_NODES[None, :]
        vals = _logint_np(kk, a[:, None], ys) + np.log(h)[:, None] + _LN_GL_WEIGHTS[None, :]
        m = vals.max(axis=1)
        out = np.logaddexp(out, m + np.log(np.exp(vals - m[:, None]).sum(axis=1)))
    return out - ((0.5 * kk - 1.0) * _LN2 + math.lgamma(0.5 * kk))


def _log_chi_mgf_np(k: int, a: np.ndarray) -> np.ndarray:
    out = np.empty(a.shape)
    zero = a == 0.0
    out[zero] = 0.0
    if k <= SERIES_MAX_K:
        z = 0.5 * a * a
        small = (a > 0.0) & (z <= SWITCH_Z)
        big = (a > 0.0) & (z > SWITCH_Z)
        neg = a < 0.0
        if small.any():
            out[small] = _series_log_np(k, a[small])
        if big.any():
            out[big] = _asym_log_np(k, a[big])
        if neg.any():
            out[neg] = _quad_log_np(k, a[neg])
    else:
        rest = ~zero
        if rest.any():
            out[rest] = _quad_log_np(k, a[rest])
    return out


def log_chi_mgf_numpy(k: int, a: np.ndarray) -> np.ndarray:
    """Pure-numpy evaluation, chunked to bound temporary memory."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    flat = a.ravel()
    out = np.empty_like(flat)
    for start in range(0, flat.size, _CHUNK):
        stop = min(start + _CHUNK, flat.size)
        out[start:stop] = _log_chi_mgf_np(k, flat[start:stop])
    return out.reshape(a.shape)


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

log_chi_mgf_numba = None

if BACKEND == "numba":
    from numba import njit

    @njit(cache=True)
    def _series_log_one(k, a):
        z = 0.5 * a * a
        f1 = 1.0
        t = 1.0
        aa = 0.5 * k
        for j in range(4000):
            t = t * ((aa + j) / ((0.5 + j) * (j + 1.0))) * z
            f1 += t
            if t <= 1e-17 * f1:
                break
        f2 = 1.0
        t = 1.0
        aa = 0.5 * (k + 1)
        for j in range(4000):
            t = t * ((aa + j) / ((1.5 + j) * (j + 1.0))) * z
            f2 += t
            if t <= 1e-17 * f2:
                break
        coef = _SQRT2 * math.exp(math.lgamma(0.5 * (k + 1)) - math.lgamma(0.5 * k))
        return math.log(f1 + coef * a * f2)

    @njit(cache=True)
    def _asym_series_one(aa, bb, z):
        s = 1.0
        t = 1.0
        p1 = bb - aa
        p2 = 1.0 - aa
        for j in range(2 * SERIES_MAX_K + 4):
            f = (p1 + j) * (p2 + j)
            if f == 0.0:
                break
            t = t * (f / (j + 1.0)) / z
            s += t
            if abs(t) <= 1e-18 * s:
                break
        return s

    @njit(cache=True)
    def _logaddexp(x, y):
        m = x if x > y else y
        if m == -np.inf:
            return -np.inf
        return m + math.log(math.exp(x - m) + math.exp(y - m))

    @njit(cache=True)
    def _asym_log_one(k, a):
        z = 0.5 * a * a
        lz = math.log(z)
        s1 = _asym_series_one(0.5 * k, 0.5, z)
        s2 = _asym_series_one(0.5 * (k + 1), 1.5, z)
        lgk = math.lgamma(0.5 * k)
        lt1 = _LG_HALF - lgk + z + (0.5 * k - 0.5) * lz + math.log(s1)
        lt2 = math.log(_SQRT2 * a) + _LG_3HALF - lgk + z + (0.5 * k - 1.0) * lz + math.log(s2)
        return _logaddexp(lt1, lt2)

    @njit(cache=True)
    def _logint_one(kk, a, y):
        w = math.exp(min(y, 350.0))
        return kk * y - 0.5 * w * w + a * w

    @njit(cache=True)
    def _drop_distance_one(kk, a, y_star, target, side):
        hi = 1.0
        for _ in range(42):
            if _logint_one(kk, a, y_star + side * hi) <= target:
                break
            hi *= 2.0
        lo = 0.0
        for _ in range(22):
            mid = 0.5 * (lo + hi)
            if _logint_one(kk, a, y_star + side * mid) > target:
                lo = mid
            else:
                hi = mid
        return hi

    @njit(cache=True)
    def _quad_log_one(k, a):
        kk = float(k)
        disc = math.sqrt(a * a + 4.0 * kk)
        if a >= 0.0:
            w_star = 0.5 * (a + disc)
        else:
            w_star = 2.0 * kk / (disc - a)
        y_star = math.log(w_star)
        f_star = _logint_one(kk, a, y_star)
        target = f_star - DROP
        dl = _drop_distance_one(kk, a, y_star, target, -1.0)
        dr = _drop_distance_one(kk, a, y_star, target, +1.0)
        sig = 1.0 / math.sqrt(w_star * disc)
        y_lo = y_star - dl
        y_hi = y_star + dr
        y_mid = y_star - min(2.0 * sig, 0.5 * dl)
        m = -np.inf
        s = 0.0
        for p in range(2):
            lo = y_lo if p == 0 else y_mid
            hi = y_mid if p == 0 else y_hi
            c = 0.5 * (lo + hi)
            h = 0.5 * (hi - lo)
            lh = math.log(h)
            for j in range(_GL_NODES.size):
                v = _logint_one(kk, a, c + h * _GL_NODES[j]) + lh + _LN_GL_WEIGHTS[j]
                if v > m:
                    s = s * math.exp(m - v) + 1.0
                    m = v
                else:
                    s += math.exp(v - m)
        return m + math.log(s) - ((0.5 * kk - 1.0) * _LN2 + math.lgamma(0.5 * kk))

    @njit(cache=True)
    def _log_chi_mgf_one(k, a):
        if a == 0.0:
            return 0.0
        if k <= SERIES_MAX_K:
            if a > 0.0:
                if 0.5 * a * a <= SWITCH_Z:
                    return _series_log_one(k, a)
                return _asym_log_one(k, a)
        return _quad_log_one(k, a)

    @njit(cache=True)
    def _log_chi_mgf_loop(k, a, out):
        for i in range(a.size):
            out[i] = _log_chi_mgf_one(k, a[i])

    def log_chi_mgf_numba(k: int, a: np.ndarray) -> np.ndarray:
        a = np.ascontiguousarray(a, dtype=np.float64)
        out = np.empty(a.size, dtype=np.float64)
        _log_chi_mgf_loop(k, a.ravel(), out)
        return out.reshape(a.shape)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def log_chi_mgf(k: int, a) -> np.ndarray | float:
    """ln E[exp(a*X)] for X ~ chi with k degrees of freedom, elementwise.

    Scalar input yields a float; array input an array of the same shape.
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"degrees of freedom must be a positive integer, got {k!r}")
    arr = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("chi-MGF argument must be finite")
    flat = arr.ravel()
    if BACKEND == "numba":
        out = log_chi_mgf_numba(int(k), flat)
    else:
        out = log_chi_mgf_numpy(int(k), flat)
    if np.isscalar(a) or arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)
