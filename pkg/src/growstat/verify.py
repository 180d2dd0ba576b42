"""Monte Carlo and quadrature verification suites.

Each suite turns one family of claims into pass/fail ``VerificationReport``
records: e-statistic null means, anytime validity of the threshold test,
optional-stopping behavior (including the counterexample where a stopping
rule peeking at non-invariant data inflates the stopped mean), moment
generating function oracles, the finite-group KL duality, and the
truncated-Haar KL trend.

Determinism: a suite is a fixed ordered list of tasks; the master seed is
split into per-task streams with ``numpy.random.SeedSequence.spawn``, so
serial and threaded runs produce identical reports per task.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from functools import partial
import json

import numpy as np
from scipy import integrate, optimize, stats

from .errors import NonConvergenceError, NoSignChangeError
from ._kernels import log_chi_mgf
from . import finite_group as fg
from . import lt_group as lt
from . import regression as rg
from . import ttest as tt

__all__ = [
    "VerificationReport",
    "mc_expectation",
    "f_function",
    "find_unit_crossings",
    "counterexample_expectation",
    "run_suite",
    "SUITE_NAMES",
]


@dataclass(frozen=True)
class VerificationReport:
    """One numeric check: estimate vs target at a tolerance.

    Two-sided by default; names ending in ``_le`` / ``_ge`` flag one-sided
    checks (estimate below / above target within tolerance).  Deterministic
    checks carry ``std_error`` 0.
    """

    name: str
    estimate: float
    std_error: float
    target: float
    tolerance: float
    passed: bool
    replications: int
    seed: int

    def to_json_line(self) -> str:
        return json.dumps(asdict(self))


def _report(name, estimate, target, tolerance, *, se=0.0, reps=0, seed=0) -> VerificationReport:
    estimate = float(estimate)
    target = float(target)
    tolerance = float(tolerance)
    if name.endswith("_le"):
        passed = estimate <= target + tolerance
    elif name.endswith("_ge"):
        passed = estimate >= target - tolerance
    else:
        passed = abs(estimate - target) <= tolerance
    return VerificationReport(name=name, estimate=estimate, std_error=float(se),
                              target=target, tolerance=tolerance, passed=bool(passed),
                              replications=int(reps), seed=int(seed))


def mc_expectation(sampler, statistic, replications: int, seed: int):
    """(mean, standard error) of ``statistic(sampler(rng, replications))``.

    ``sampler`` draws a batch given a seeded generator; ``statistic`` maps
    the batch to one value per replication.
    """
    if replications < 100:
        raise ValueError(f"need at least 100 replications, got {replications}")
    rng = np.random.default_rng(seed)
    vals = np.asarray(statistic(sampler(rng, replications)), dtype=float)
    if vals.shape != (replications,):
        raise ValueError(f"statistic must return one value per replication, got {vals.shape}")
    bad = ~np.isfinite(vals)
    if bad.any():
        raise NonConvergenceError(
            f"non-finite statistic value at replication {int(np.where(bad)[0][0])}")
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(replications))


# ---------------------------------------------------------------------------
# counterexample machinery: mean of the stopped two-step mixture e-value
# ---------------------------------------------------------------------------

def f_function(x: float, kappa: float, rel_tol: float = 1e-9) -> float:
    """E over a standard normal second observation of the two-observation
    mixture e-value with first observation fixed at x.

    The integrand has a spike of width about |x|/kappa at the second
    observation equal to x, so the quadrature is split there.
    """
    if x == 0.0:
        raise ValueError("undefined at x = 0")

    def g(s):
        return stats.norm.pdf(s) * tt.t2_closed_form(x, s, kappa)

    total = 0.0
    err = 0.0
    pieces = ((-np.inf, x - 1.0, None), (x - 1.0, x + 1.0, [x]), (x + 1.0, np.inf, None))
    for lo, hi, pts in pieces:
        v, e = integrate.quad(g, lo, hi, points=pts, epsabs=1e-12,
                              epsrel=rel_tol * 1e-1, limit=300)
        total += v
        err += e
    if not np.isfinite(total) or err > max(rel_tol * abs(total), 1e-11):
        raise NonConvergenceError(f"quadrature failed: value={total!r}, abserr={err!r}")
    return total


def find_unit_crossings(kappa: float, xtol: float = 1e-6):
    """The two positive solutions of f(x) = 1 bracketing the region f > 1.

    Verifies the sign changes on both sides of the maximum before root
    finding; bisection to ``xtol``.
    """
    grid = np.linspace(1e-2, 8.0, 64)
    vals = np.array([f_function(float(x), kappa, rel_tol=1e-7) for x in grid])
    i_peak = int(np.argmax(vals))
    if vals[i_peak] <= 1.0:
        raise NoSignChangeError("f never exceeds 1: no crossings to find")
    below = np.nonzero(vals[:i_peak + 1] < 1.0)[0]
    above = np.nonzero(vals[i_peak:] < 1.0)[0]
    if below.size == 0 or above.size == 0:
        raise NoSignChangeError("f - 1 does not change sign on both sides of the peak")
    lo_idx = below[-1]
    hi_idx = i_peak + above[0]
    a = optimize.brentq(lambda v: f_function(float(v), kappa) - 1.0,
                        grid[lo_idx], grid[lo_idx + 1], xtol=xtol)
    b = optimize.brentq(lambda v: f_function(float(v), kappa) - 1.0,
                        grid[hi_idx - 1], grid[hi_idx], xtol=xtol)
    return float(a), float(b)


def counterexample_expectation(kappa: float, a: float, b: float,
                               rel_tol: float = 1e-9) -> float:
    """Deterministic mean of the stopped mixture e-value for the rule
    "stop after one observation unless |x1| lies in [a, b], else after two".

    P(|X1| outside [a,b]) + 2 * int_a^b phi(x) f(x) dx; no Monte Carlo.
    """
    if not (0.0 < a <= b):
        raise ValueError(f"need 0 < a <= b, got a={a!r}, b={b!r}")
    tail = 2.0 * stats.norm.cdf(-b) + (1.0 - 2.0 * stats.norm.cdf(-a))
    if a == b:
        return float(tail)
    body, err = integrate.quad(lambda x: stats.norm.pdf(x) * f_function(float(x), kappa),
                               a, b, epsabs=1e-12, epsrel=rel_tol * 1e-1, limit=200)
    total = tail + 2.0 * body
    if not np.isfinite(total) or err > rel_tol * total:
        raise NonConvergenceError(f"quadrature failed: value={total!r}, abserr={err!r}")
    return float(total)


# ---------------------------------------------------------------------------
# shared vectorized helpers
# ---------------------------------------------------------------------------

def _ttest_log_evalue_paths(z: np.ndarray, delta0: float, delta1: float) -> np.ndarray:
    """log e-value at every prefix length for t-test streams.

    ``z`` has shape (reps, horizon) and holds data already scaled/shifted.
    Column n-1 of the result is ln T_n of the prefix of length n.
    """
    reps, horizon = z.shape
    csum = np.cumsum(z, axis=1)
    csq = np.cumsum(z * z, axis=1)
    out = np.empty((reps, horizon))
    for n in range(1, horizon + 1):
        xbar = csum[:, n - 1] / n
        amp = csq[:, n - 1] / n  # xbar^2 + vbar
        root = math.sqrt(n) * xbar / np.sqrt(amp)
        out[:, n - 1] = (-0.5 * n * (delta1**2 - delta0**2)
                         + log_chi_mgf(n, delta1 * root) - log_chi_mgf(n, delta0 * root))
    return out


def _t_statistic_paths(z: np.ndarray) -> np.ndarray:
    """t-statistic at every prefix length >= 2 (column 0 is NaN)."""
    reps, horizon = z.shape
    csum = np.cumsum(z, axis=1)
    csq = np.cumsum(z * z, axis=1)
    out = np.full((reps, horizon), np.nan)
    for n in range(2, horizon + 1):
        xbar = csum[:, n - 1] / n
        ssd = np.maximum(csq[:, n - 1] - n * xbar * xbar, 0.0)
        s = np.sqrt(ssd / (n - 1))
        with np.errstate(divide="ignore", invalid="ignore"):
            out[:, n - 1] = math.sqrt(n) * xbar / s
    return out


def _mc_mean_report(name, values, target, seed, *, one_sided=None) -> VerificationReport:
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(values.size))
    suffix = {"le": "_le", "ge": "_ge", None: ""}[one_sided]
    return _report(name + suffix, mean, target, 3.0 * se, se=se,
                   reps=values.size, seed=seed)


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------

def _suite_finite_duality(seed: int, smoke: bool):
    n_instances = 20 if smoke else 200
    n_prior_pairs = 5
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    gap_max = 0.0
    opt_max = 0.0
    lb_min = math.inf
    probe_max = -math.inf
    estat_dev = 0.0
    growth_spread = 0.0
    for _ in range(n_instances):
        pair = fg.random_pair(rng)
        m = pair.action.group.order
        klm = fg.kl_maximal_invariant(pair)
        gap_max = max(gap_max, abs(fg.joint_kl(pair, fg.PriorPair.uniform(m)) - klm))
        init = fg.PriorPair(pi0=rng.dirichlet(np.ones(m)), pi1=rng.dirichlet(np.ones(m)))
        _, val = fg.joint_kl_minimize(pair, tol=1e-10, init=init)
        opt_max = max(opt_max, abs(val - klm))
        for _ in range(n_prior_pairs):
            pp = fg.PriorPair(pi0=rng.dirichlet(np.ones(m)), pi1=rng.dirichlet(np.ones(m)))
            lb_min = min(lb_min, fg.joint_kl(pair, pp) - klm)
        t_star = fg.invariant_lr(pair)
        p_tab, q_tab = pair.density_tables()
        estat_dev = max(estat_dev, float(np.abs(p_tab @ t_star - 1.0).max()))
        with np.errstate(divide="ignore"):
            log_t = np.log(t_star)
        growth_by_g = q_tab @ log_t
        growth_spread = max(growth_spread, float(growth_by_g.max() - growth_by_g.min()))
        t_probe = rng.random(pair.action.space_size) + 1e-3
        t_probe /= (p_tab @ t_probe).max()
        probe_max = max(probe_max, fg.worst_case_growth(pair, t_probe) - klm)
    return [
        _report("finite_duality.uniform_prior_gap_max", gap_max, 0.0, 1e-12,
                reps=n_instances, seed=seed),
        _report("finite_duality.minimizer_value_error_max", opt_max, 0.0, 1e-8,
                reps=n_instances, seed=seed),
        _report("finite_duality.random_prior_margin_min_ge", lb_min, 0.0, 1e-12,
                reps=n_instances * n_prior_pairs, seed=seed),
        _report("finite_duality.probe_growth_excess_max_le", probe_max, 0.0, 1e-12,
                reps=n_instances, seed=seed),
        _report("finite_duality.invariant_lr_null_mean_dev_max", estat_dev, 0.0, 1e-12,
                reps=n_instances, seed=seed),
        _report("finite_duality.growth_group_independence_max", growth_spread, 0.0, 1e-12,
                reps=n_instances, seed=seed),
    ]


def _suite_ttest_equivalence(seed: int, smoke: bool):
    ns = (2, 5, 10, 20, 50) if smoke else tuple(range(2, 51))
    per_n = 5 if smoke else 100
    deltas = (-2.0, -1.0, 0.0, 1.0, 2.0)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    worst = 0.0
    count = 0
    for n in ns:
        data = rng.normal(rng.uniform(-1, 1, (per_n, 1)),
                          rng.uniform(0.5, 2.0, (per_n, 1)), (per_n, n))
        xbar = data.mean(axis=1)
        vbar = ((data - xbar[:, None]) ** 2).mean(axis=1)
        for d0 in deltas:
            num0 = tt.log_haar_numerator(n, xbar, vbar, d0)
            for d1 in deltas:
                num1 = tt.log_haar_numerator(n, xbar, vbar, d1)
                log_haar = num1 - num0
                log_nct = tt.log_evalue_from_moments(n, xbar, vbar, d0, d1)
                rel = np.abs(np.expm1(log_haar - log_nct))
                worst = max(worst, float(rel.max()))
                count += per_n
    return [_report("ttest_equivalence.max_rel_diff", worst, 0.0, 1e-6,
                    reps=count, seed=seed)]


def _ttest_estat_task(sigma, child, seed, smoke):
    reps = 2_000 if smoke else 100_000
    n = 10
    delta0, delta1 = 0.3, 1.0
    rng = np.random.default_rng(child)
    data = sigma * (delta0 + rng.standard_normal((reps, n)))
    xbar = data.mean(axis=1)
    vbar = ((data - xbar[:, None]) ** 2).mean(axis=1)
    ev = np.exp(tt.log_evalue_from_moments(n, xbar, vbar, delta0, delta1))
    return [_mc_mean_report(f"ttest_estat.null_mean[sigma={sigma}]", ev, 1.0, seed)]


def _tasks_ttest_estat(seed: int, smoke: bool):
    seeds = np.random.SeedSequence(seed).spawn(3)
    return [partial(_ttest_estat_task, sigma, child, seed, smoke)
            for sigma, child in zip((0.1, 1.0, 10.0), seeds)]


def _lt_mgf_task(d, child, seed, smoke):
    reps = 20_000 if smoke else 1_000_000
    pairs = 5 if smoke else 20
    rng = np.random.default_rng(child)
    dofs = (d, d + 2) if smoke else tuple(range(d, 11))
    worst_z = 0.0
    for dof in dofs:
        tl = np.tril(rng.standard_normal((reps, d, d)), -1)
        idx = np.arange(d)
        tl[:, idx, idx] = np.sqrt(rng.chisquare(dof - idx, (reps, d)))
        for _ in range(pairs):
            x = rng.uniform(-0.9, 0.9, d)
            y = rng.uniform(-0.9, 0.9, d)
            ana = lt.wishart_lt_mgf(x, y, dof)
            vals = np.exp(np.einsum("i,rij,j->r", x, tl, y))
            z = (ana - vals.mean()) / (vals.std(ddof=1) / math.sqrt(reps))
            worst_z = max(worst_z, abs(float(z)))
    # the max over this many independent z-scores needs a family-corrected
    # threshold to keep the per-suite false-alarm rate at the single-check
    # level of 3 SE (0.27%); a wrong formula shows up at |z| in the hundreds
    count = len(dofs) * pairs
    z_crit = float(stats.norm.isf(0.0027 / 3.0 / count / 2.0))
    return [_report(f"lt_mgf.family_max_abs_z[d={d}]", worst_z, 0.0, z_crit,
                    reps=reps, seed=seed)]


def _tasks_lt_mgf(seed: int, smoke: bool):
    seeds = np.random.SeedSequence(seed).spawn(3)
    return [partial(_lt_mgf_task, d, child, seed, smoke)
            for d, child in zip((1, 2, 3), seeds)]


def _lt_estat_task(d, child, seed, smoke):
    reps = 2_000 if smoke else 100_000
    n = 8
    rng = np.random.default_rng(child)
    delta0 = 0.2 * np.ones(d) * np.array([1, -1, 1][:d])
    delta1 = np.array([0.6, 0.3, -0.4][:d])
    out = []
    for i in range(5):
        lam = np.tril(rng.normal(0, 1, (d, d)), -1) + np.diag(rng.uniform(0.5, 1.5, d))
        mu = lam @ delta0
        x = rng.standard_normal((reps, n, d)) @ lam.T + mu
        ev = np.exp(lt.batch_log_evalue_lt(x, delta0, delta1))
        out.append(_mc_mean_report(f"lt_estat.null_mean[d={d},cov={i}]", ev, 1.0, seed))
    return out


def _tasks_lt_estat(seed: int, smoke: bool):
    seeds = np.random.SeedSequence(seed).spawn(2)
    return [partial(_lt_estat_task, d, child, seed, smoke)
            for d, child in zip((2, 3), seeds)]


def _regression_null_task(child, seed, smoke):
    reps = 2_000 if smoke else 100_000
    n, d = 12, 3
    delta0, delta1 = 0.3, 1.1
    rng = np.random.default_rng(child)
    out = []
    for i in range(5):
        z = rng.normal(0, 1, (n, d))
        x = rng.normal(0, 1, n)
        basis = rg.residual_basis(z)
        a_mat = basis.a_mat
        sigma = float(rng.uniform(0.4, 2.5))
        beta = rng.normal(0, 2.0, d)
        y = delta0 * sigma * x + z @ beta + sigma * rng.standard_normal((reps, n))
        proj = y @ a_mat
        us = proj / np.linalg.norm(proj, axis=1, keepdims=True)
        a_vals = us @ (a_mat.T @ x)
        px = a_mat.T @ x
        c_diff = -0.5 * (delta1**2 - delta0**2) * float(px @ px)
        ev = np.exp(c_diff + log_chi_mgf(n - d, delta1 * a_vals)
                    - log_chi_mgf(n - d, delta0 * a_vals))
        out.append(_mc_mean_report(f"regression_estat.null_mean[setting={i}]", ev, 1.0, seed))
    return out


def _regression_norm_task(child, seed, smoke):
    # sphere normalization of the invariant density, and the exact flat case
    d = 3
    rng = np.random.default_rng(child)
    norm_reps = 2_000 if smoke else 100_000
    out = []
    for k in (2, 3, 5):
        nn = k + d
        z = rng.normal(0, 1, (nn, d))
        x = rng.normal(0, 1, nn)
        basis = rg.residual_basis(z)
        px = basis.a_mat.T @ x
        g = rng.standard_normal((norm_reps, k))
        us = g / np.linalg.norm(g, axis=1, keepdims=True)
        a_vals = us @ px
        for delta in (0.5, 1.0):
            c_val = -0.5 * delta * delta * float(px @ px)
            ratio = np.exp(c_val + log_chi_mgf(k, delta * a_vals))
            out.append(_mc_mean_report(f"regression_estat.sphere_integral[k={k},delta={delta}]",
                                       ratio, 1.0, seed))
        dat = rg.RegressionData(y=rng.normal(0, 1, nn), x=x, z=z)
        u = rg.u_statistic(dat, basis)
        flat = rg.u_log_density(u, 0.0, dat, basis)
        expected = math.lgamma(0.5 * k) - math.log(2.0) - 0.5 * k * math.log(math.pi)
        out.append(_report(f"regression_estat.flat_density_dev[k={k}]",
                           abs(flat - expected), 0.0, 1e-12, reps=1, seed=seed))
    return out


def _tasks_regression_estat(seed: int, smoke: bool):
    ss = np.random.SeedSequence(seed).spawn(2)
    return [partial(_regression_null_task, ss[0], seed, smoke),
            partial(_regression_norm_task, ss[1], seed, smoke)]


def _suite_anytime(seed: int, smoke: bool):
    reps = 2_000 if smoke else 100_000
    horizon = 100
    alpha = 0.05
    delta1 = 0.8
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    z = rng.standard_normal((reps, horizon))
    paths = _ttest_log_evalue_paths(z, 0.0, delta1)
    rejected = paths.max(axis=1) >= math.log(1.0 / alpha)
    freq = float(rejected.mean())
    se = math.sqrt(max(freq * (1.0 - freq), 1e-12) / reps)
    return [_report("anytime.null_rejection_rate_le", freq, alpha, 3.0 * se,
                    se=se, reps=reps, seed=seed)]


def _stopping_fixed_task(child, seed, smoke):
    reps = 2_000 if smoke else 100_000
    rng = np.random.default_rng(child)
    z = rng.standard_normal((reps, 10))
    paths = _ttest_log_evalue_paths(z, 0.0, 0.8)
    return [_mc_mean_report("optional_stopping.fixed_horizon_mean", np.exp(paths[:, -1]),
                            1.0, seed)]


def _stopping_tstat_task(child, seed, smoke):
    # invariant rule: stop once |t_n| > 2 (or at horizon 30)
    reps = 2_000 if smoke else 100_000
    rng = np.random.default_rng(child)
    z = rng.standard_normal((reps, 30))
    paths = _ttest_log_evalue_paths(z, 0.0, 0.8)
    tstats = _t_statistic_paths(z)
    hit = np.abs(np.nan_to_num(tstats, nan=0.0)) > 2.0
    stop_idx = np.where(hit.any(axis=1), hit.argmax(axis=1), z.shape[1] - 1)
    stopped = np.exp(paths[np.arange(reps), stop_idx])
    return [_mc_mean_report("optional_stopping.t_threshold_rule_mean", stopped, 1.0,
                            seed, one_sided="le")]


def _stopping_crossing_task(child, seed, smoke):
    # invariant rule: stop at the rejection threshold (or at horizon 50)
    reps = 2_000 if smoke else 100_000
    rng = np.random.default_rng(child)
    z = rng.standard_normal((reps, 50))
    paths = _ttest_log_evalue_paths(z, 0.0, 0.8)
    hit = paths >= math.log(20.0)
    stop_idx = np.where(hit.any(axis=1), hit.argmax(axis=1), z.shape[1] - 1)
    stopped = np.exp(paths[np.arange(reps), stop_idx])
    return [_mc_mean_report("optional_stopping.crossing_rule_mean", stopped, 1.0,
                            seed, one_sided="le")]


def _stopping_full_data_task(child, seed, smoke):
    # non-adapted rule: stop after one observation iff |x1| outside [lo, hi];
    # the stopped mixture e-value then has null mean well above 1
    reps_rule = 20_000 if smoke else 1_000_000
    kappa, lo, hi = 200.0, 0.44, 1.70
    rng = np.random.default_rng(child)
    x1 = rng.standard_normal(reps_rule)
    x2 = rng.standard_normal(reps_rule)
    second = (np.abs(x1) >= lo) & (np.abs(x1) <= hi)
    s2 = x1 * x1 + x2 * x2
    t2 = np.sqrt(2.0 * kappa**2 + 1.0) * s2 / (kappa**2 * (x1 - x2) ** 2 + s2)
    stopped = np.where(second, t2, 1.0)
    mean = float(stopped.mean())
    se = float(stopped.std(ddof=1) / math.sqrt(reps_rule))
    return [_report("optional_stopping.full_data_rule_mean_ge", mean, 1.1, 0.0,
                    se=se, reps=reps_rule, seed=seed)]


def _tasks_optional_stopping(seed: int, smoke: bool):
    seeds = np.random.SeedSequence(seed).spawn(4)
    funcs = (_stopping_fixed_task, _stopping_tstat_task, _stopping_crossing_task,
             _stopping_full_data_task)
    return [partial(fn, child, seed, smoke) for fn, child in zip(funcs, seeds)]


def _quadrature_stability(value_fn, scales=(1.0, 0.1)) -> float:
    base = value_fn(scales[0])
    tight = value_fn(scales[1])
    return abs(tight - base) / max(1.0, abs(base))


def _suite_counterexample(seed: int, smoke: bool):
    kappa = 200.0
    a, b = find_unit_crossings(kappa, xtol=1e-6)
    est = counterexample_expectation(kappa, 0.44, 1.70)
    shift = _quadrature_stability(lambda s: counterexample_expectation(kappa, 0.44, 1.70,
                                                                       rel_tol=1e-9 * s))
    fa = f_function(a, kappa)
    fb = f_function(b, kappa)
    fm = f_function(0.5 * (a + b), kappa)
    return [
        _report("counterexample.lower_crossing", a, 0.44, 0.01, seed=seed),
        _report("counterexample.upper_crossing", b, 1.70, 0.01, seed=seed),
        _report("counterexample.crossing_residual_max", max(abs(fa - 1), abs(fb - 1)),
                0.0, 1e-4, seed=seed),
        _report("counterexample.interior_above_one_ge", fm, 1.0, 0.0, seed=seed),
        _report("counterexample.stopped_mean", est, 1.19, 0.02, seed=seed),
        _report("counterexample.quadrature_drift_le", shift, 0.0, 1e-8, seed=seed),
    ]


def _suite_haar_kl_trend(seed: int, smoke: bool):
    reps = 4_000 if smoke else 100_000
    c_values = (2.0, 10.0, 100.0)
    hyp = tt.TTestHypotheses(0.0, 1.0)
    n = 2
    ss = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.default_rng(ss[0])
    u01 = rng.uniform(-1.0, 1.0, reps)
    z = rng.standard_normal((reps, n))
    quad = tt.HaarQuadrature.with_nodes(256)
    quad_double = tt.HaarQuadrature.with_nodes(512)
    samples = {}
    for c in c_values:
        log_c = math.log(c)
        sigma = np.exp(u01 * log_c)
        x = sigma[:, None] * (hyp.delta1 + z)
        lq = tt._log_truncated_mixture_density(x, log_c, hyp.delta1, quad)
        lp = tt._log_truncated_mixture_density(x, log_c, hyp.delta0, quad)
        # node-doubling guard on the mixture-density quadrature
        lq2 = tt._log_truncated_mixture_density(x[:50], log_c, hyp.delta1, quad_double)
        drift = float(np.max(np.abs(lq2 - lq[:50])))
        if drift > 1e-8:
            raise NonConvergenceError(f"mixture-density quadrature drift {drift} at c={c}")
        samples[c] = lq - lp

    # reference growth rate: E[ln T] under the alternative at sigma = 1
    rng = np.random.default_rng(ss[1])
    z_ref = hyp.delta1 + rng.standard_normal((reps, n))
    xbar = z_ref.mean(axis=1)
    vbar = ((z_ref - xbar[:, None]) ** 2).mean(axis=1)
    ref_vals = tt.log_evalue_from_moments(n, xbar, vbar, hyp.delta0, hyp.delta1)
    ref = float(ref_vals.mean())
    ref_se = float(ref_vals.std(ddof=1) / math.sqrt(reps))

    out = []
    for c in c_values:
        vals = samples[c]
        est = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(reps))
        comb = math.sqrt(se * se + ref_se * ref_se)
        out.append(_report(f"haar_kl_trend.kl[c={c}]_ge", est, ref, 3.0 * comb,
                           se=se, reps=reps, seed=seed))
    for c_small, c_big in zip(c_values[:-1], c_values[1:]):
        diff = samples[c_small] - samples[c_big]
        est = float(diff.mean())
        se = float(diff.std(ddof=1) / math.sqrt(reps))
        out.append(_report(f"haar_kl_trend.monotone[{c_small}->{c_big}]_ge", est, 0.0,
                           3.0 * se, se=se, reps=reps, seed=seed))
    return out


def _single_task(fn):
    def build(seed, smoke):
        return [partial(fn, seed, smoke)]
    return build


_SUITES = {
    "finite_duality": _single_task(_suite_finite_duality),
    "ttest_equivalence": _single_task(_suite_ttest_equivalence),
    "ttest_estat": _tasks_ttest_estat,
    "lt_mgf": _tasks_lt_mgf,
    "lt_estat": _tasks_lt_estat,
    "regression_estat": _tasks_regression_estat,
    "anytime": _single_task(_suite_anytime),
    "optional_stopping": _tasks_optional_stopping,
    "counterexample": _single_task(_suite_counterexample),
    "haar_kl_trend": _single_task(_suite_haar_kl_trend),
}

SUITE_NAMES = tuple(sorted(_SUITES))

STOCHASTIC_SUITES = tuple(s for s in SUITE_NAMES if s != "counterexample")


def run_suite(suite_name: str, seed: int, smoke: bool = False, threads: int = 1):
    """Run one named battery; returns its list of VerificationReport.

    Tasks receive independent spawned seed streams and their reports are
    merged in task order, so serial and threaded runs agree.  Smoke mode
    shrinks replication counts and tags report names accordingly.
    """
    if suite_name not in _SUITES:
        raise ValueError(f"unknown suite {suite_name!r}; choose from {SUITE_NAMES}")
    tasks = _SUITES[suite_name](seed, smoke)
    if threads <= 1:
        chunks = [task() for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda task: task(), tasks))
    reports = [r for chunk in chunks for r in chunk]
    if smoke:
        reports = [VerificationReport(name=r.name + "@smoke", estimate=r.estimate,
                                      std_error=r.std_error, target=r.target,
                                      tolerance=r.tolerance, passed=r.passed,
                                      replications=r.replications, seed=r.seed)
                   for r in reports]
    return reports
