"""Acceptance gate: every criterion at its stated tolerance, one line each.

Run with ``pytest tests/test_acceptance.py -v``; each criterion prints an
ACCEPTANCE line to the terminal.  The verification suites behind the heavier
criteria run at full replication counts, so this module takes a few minutes.
"""

import json
import math
import time

import numpy as np
import pytest

from growstat import cli
from growstat import ttest as tt
from growstat import verify

_results = {}


def _suite(name, seed):
    key = (name, seed)
    if key not in _results:
        t0 = time.perf_counter()
        reports = verify.run_suite(name, seed)
        _results[key] = (reports, time.perf_counter() - t0)
    return _results[key]


def _line(capsys, num, label, passed, detail):
    with capsys.disabled():
        print(f"\nACCEPTANCE {num:02d} {label}: {'PASS' if passed else 'FAIL'} ({detail})",
              end=" ")


def _assert_reports(capsys, num, label, reports, elapsed):
    failed = [r for r in reports if not r.passed]
    _line(capsys, num, label, not failed, f"{len(reports)} checks, {elapsed:.1f}s")
    assert not failed, [json.loads(r.to_json_line()) for r in failed]


def test_criterion_01_counterexample_expectation(capsys):
    t0 = time.perf_counter()
    code = cli.main(["counterexample", "--kappa", "200", "--a", "0.44", "--b", "1.70"])
    elapsed = time.perf_counter() - t0
    out = capsys.readouterr().out
    doc = json.loads(out)
    ok = code == 0 and 1.17 <= doc["estimate"] <= 1.21 and elapsed < 10.0
    _line(capsys, 1, "stopped-mean expectation",
          ok, f"estimate={doc['estimate']:.4f} in [1.17, 1.21], {elapsed:.1f}s < 10s")
    assert code == 0
    assert 1.17 <= doc["estimate"] <= 1.21
    assert elapsed < 10.0


def test_criterion_02_unit_crossing_recovery(capsys):
    t0 = time.perf_counter()
    a, b = verify.find_unit_crossings(200.0)
    elapsed = time.perf_counter() - t0
    ok = 0.43 <= a <= 0.45 and 1.69 <= b <= 1.71 and elapsed < 10.0
    _line(capsys, 2, "unit-crossing recovery", ok,
          f"a={a:.4f} in [0.43, 0.45], b={b:.4f} in [1.69, 1.71], {elapsed:.1f}s < 10s")
    assert 0.43 <= a <= 0.45
    assert 1.69 <= b <= 1.71
    assert elapsed < 10.0


def test_criterion_03_single_observation_mixture_is_one(capsys):
    worst = 0.0
    for x1 in (0.1, -0.1, 1.0, -1.0, 5.0, -5.0):
        worst = max(worst, abs(tt.mixture_evalue([x1], 200.0) - 1.0))
    _line(capsys, 3, "one-observation mixture identity", worst <= 1e-8,
          f"max |T1 - 1| = {worst:.2e} <= 1e-8")
    assert worst <= 1e-8


def test_criterion_04_mixture_matches_closed_form(capsys):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        x1, x2 = rng.normal(0.0, 1.5, 2)
        kappa = math.exp(rng.uniform(math.log(0.1), math.log(300.0)))
        got = tt.mixture_evalue([x1, x2], kappa)
        ref = tt.t2_closed_form(x1, x2, kappa)
        worst = max(worst, abs(got - ref) / ref)
    _line(capsys, 4, "mixture vs closed form (1000 triples)", worst <= 1e-6,
          f"max rel diff = {worst:.2e} <= 1e-6")
    assert worst <= 1e-6


def test_criterion_05_haar_noncentral_equivalence(capsys):
    reports, elapsed = _suite("ttest_equivalence", 50)
    ok = all(r.passed for r in reports) and elapsed < 60.0
    _line(capsys, 5, "scale-mixture vs noncentral-t equivalence", ok,
          f"max rel diff = {reports[0].estimate:.2e} <= 1e-6, {elapsed:.1f}s < 60s")
    assert all(r.passed for r in reports), [r for r in reports if not r.passed]
    assert elapsed < 60.0


def test_criterion_06_finite_group_duality(capsys):
    reports, elapsed = _suite("finite_duality", 60)
    _assert_reports(capsys, 6, "finite-group duality battery", reports, elapsed)


def test_criterion_07_null_means_are_one(capsys):
    total = 0.0
    all_reports = []
    for name in ("ttest_estat", "lt_estat", "regression_estat"):
        reports, elapsed = _suite(name, 70)
        total += elapsed
        all_reports.extend(r for r in reports if "null_mean" in r.name)
    failed = [r for r in all_reports if not r.passed]
    ok = not failed and total < 600.0
    _line(capsys, 7, "e-statistic null means", ok,
          f"{len(all_reports)} Monte Carlo means within 3 SE of 1, {total:.1f}s < 600s")
    assert not failed, [json.loads(r.to_json_line()) for r in failed]
    assert total < 600.0


def test_criterion_08_anytime_validity(capsys):
    reports, elapsed = _suite("anytime", 80)
    _assert_reports(capsys, 8, "anytime validity at level 0.05", reports, elapsed)


def test_criterion_09_optional_stopping_dichotomy(capsys):
    reports, elapsed = _suite("optional_stopping", 90)
    adapted = [r for r in reports if "full_data" not in r.name]
    nonadapted = [r for r in reports if "full_data" in r.name]
    ok = all(r.passed for r in reports) and nonadapted and nonadapted[0].estimate >= 1.1
    _line(capsys, 9, "optional stopping dichotomy", ok,
          f"{len(adapted)} adapted rules hold; stopped mean of the non-adapted rule "
          f"= {nonadapted[0].estimate:.3f} >= 1.1, {elapsed:.1f}s")
    assert all(r.passed for r in reports), [r for r in reports if not r.passed]
    assert nonadapted[0].estimate >= 1.1


def test_criterion_10_wishart_mgf_oracle(capsys):
    reports, elapsed = _suite("lt_mgf", 100)
    _assert_reports(capsys, 10, "triangular Wishart MGF vs sampling oracle", reports, elapsed)


def test_criterion_11_sphere_density_normalization(capsys):
    reports, elapsed = _suite("regression_estat", 70)
    norm_reports = [r for r in reports
                    if "sphere_integral" in r.name or "flat_density" in r.name]
    failed = [r for r in norm_reports if not r.passed]
    _line(capsys, 11, "direction-density normalization", not failed,
          f"{len(norm_reports)} checks (6 Monte Carlo integrals, 3 exact)")
    assert len(norm_reports) == 9
    assert not failed, [json.loads(r.to_json_line()) for r in failed]


def test_criterion_12_truncated_haar_kl_trend(capsys):
    reports, elapsed = _suite("haar_kl_trend", 120)
    _assert_reports(capsys, 12, "truncated-Haar KL trend", reports, elapsed)
