import json
import math

import numpy as np
import pytest

from growstat import verify
from growstat.errors import NonConvergenceError, NoSignChangeError


class TestMcExpectation:
    def test_constant_statistic(self):
        mean, se = verify.mc_expectation(lambda rng, n: np.zeros(n),
                                         lambda s: np.ones_like(s), 500, 0)
        assert mean == 1.0 and se == 0.0

    def test_standard_normal_mean(self):
        mean, se = verify.mc_expectation(lambda rng, n: rng.standard_normal(n),
                                         lambda s: s, 100_000, 1)
        assert se == pytest.approx(1.0 / math.sqrt(100_000), rel=0.02)
        assert abs(mean) < 3 * se

    def test_reproducible(self):
        a = verify.mc_expectation(lambda rng, n: rng.standard_normal(n),
                                  lambda s: s * s, 1_000, 42)
        b = verify.mc_expectation(lambda rng, n: rng.standard_normal(n),
                                  lambda s: s * s, 1_000, 42)
        assert a == b

    def test_non_finite_reported_with_index(self):
        def statistic(s):
            out = np.ones_like(s)
            out[17] = np.nan
            return out

        with pytest.raises(NonConvergenceError, match="17"):
            verify.mc_expectation(lambda rng, n: np.zeros(n), statistic, 500, 0)

    def test_minimum_replications(self):
        with pytest.raises(ValueError):
            verify.mc_expectation(lambda rng, n: np.zeros(n), lambda s: s, 50, 0)

    def test_ttest_evalue_null_mean(self):
        from growstat import ttest as tt

        def statistic(batch):
            xbar = batch.mean(axis=1)
            vbar = ((batch - xbar[:, None]) ** 2).mean(axis=1)
            return np.exp(tt.log_evalue_from_moments(10, xbar, vbar, 0.0, 0.8))

        mean, se = verify.mc_expectation(lambda rng, n: rng.standard_normal((n, 10)),
                                         statistic, 20_000, 3)
        assert abs(mean - 1.0) < 3 * se


class TestFFunction:
    def test_even(self):
        for x in (0.3, 1.0, 2.2):
            assert verify.f_function(x, 200.0) == pytest.approx(
                verify.f_function(-x, 200.0), rel=1e-10)

    def test_exceeds_one_inside(self):
        assert verify.f_function(1.0, 200.0) > 1.0

    def test_below_one_outside(self):
        assert verify.f_function(3.0, 200.0) < 1.0

    def test_undefined_at_zero(self):
        with pytest.raises(ValueError):
            verify.f_function(0.0, 200.0)


class TestFindUnitCrossings:
    def test_recovers_known_interval(self):
        a, b = verify.find_unit_crossings(200.0)
        assert 0.43 <= a <= 0.45
        assert 1.69 <= b <= 1.71
        assert verify.f_function(0.5 * (a + b), 200.0) > 1.0
        assert abs(verify.f_function(a, 200.0) - 1.0) <= 1e-4
        assert abs(verify.f_function(b, 200.0) - 1.0) <= 1e-4

    def test_no_sign_change_error(self, monkeypatch):
        monkeypatch.setattr(verify, "f_function", lambda x, kappa, rel_tol=1e-9: 0.5)
        with pytest.raises(NoSignChangeError):
            verify.find_unit_crossings(200.0)


class TestCounterexampleExpectation:
    def test_known_value(self):
        est = verify.counterexample_expectation(200.0, 0.44, 1.70)
        assert est == pytest.approx(1.19, abs=0.02)

    def test_degenerate_interval(self):
        assert verify.counterexample_expectation(200.0, 0.7, 0.7) == 1.0

    def test_interval_where_f_below_one(self):
        assert verify.counterexample_expectation(200.0, 2.5, 3.5) < 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            verify.counterexample_expectation(200.0, -0.1, 1.0)
        with pytest.raises(ValueError):
            verify.counterexample_expectation(200.0, 2.0, 1.0)


class TestRunSuite:
    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            verify.run_suite("bogus", 0)

    def test_deterministic_given_seed(self):
        a = verify.run_suite("ttest_estat", 7, smoke=True)
        b = verify.run_suite("ttest_estat", 7, smoke=True)
        assert [r.to_json_line() for r in a] == [r.to_json_line() for r in b]

    def test_seed_changes_estimates(self):
        a = verify.run_suite("ttest_estat", 7, smoke=True)
        b = verify.run_suite("ttest_estat", 8, smoke=True)
        assert a[0].estimate != b[0].estimate

    def test_threads_match_serial(self):
        serial = verify.run_suite("lt_estat", 3, smoke=True, threads=1)
        threaded = verify.run_suite("lt_estat", 3, smoke=True, threads=4)
        assert [r.to_json_line() for r in serial] == [r.to_json_line() for r in threaded]

    def test_smoke_reports_are_tagged(self):
        reports = verify.run_suite("anytime", 5, smoke=True)
        assert all(r.name.endswith("@smoke") for r in reports)
        assert all(r.replications < 100_000 for r in reports)

    def test_report_json_fields(self):
        reports = verify.run_suite("anytime", 5, smoke=True)
        doc = json.loads(reports[0].to_json_line())
        assert set(doc) == {"name", "estimate", "std_error", "target", "tolerance",
                            "passed", "replications", "seed"}

    @pytest.mark.parametrize("suite", verify.SUITE_NAMES)
    def test_all_suites_pass_in_smoke_mode(self, suite):
        reports = verify.run_suite(suite, 7, smoke=True)
        assert reports, suite
        failed = [r for r in reports if not r.passed]
        assert not failed, failed

    def test_monte_carlo_reports_have_se_and_replications(self):
        for suite in ("ttest_estat", "lt_estat", "haar_kl_trend"):
            for r in verify.run_suite(suite, 9, smoke=True):
                if r.std_error > 0:
                    assert r.replications >= 100
