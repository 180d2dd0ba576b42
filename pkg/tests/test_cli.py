import json

import numpy as np
import pytest

from growstat import cli
from growstat import finite_group as fg
from growstat import ttest as tt


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def ttest_file(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "obs.txt"
    np.savetxt(path, rng.normal(0.9, 1.0, 20))
    return str(path)


class TestTTestCommand:
    def test_basic_run(self, capsys, ttest_file):
        code, out, _ = run_cli(capsys, "ttest", "--delta0", "0", "--delta1", "0.5",
                               "--alpha", "0.05", "--input", ttest_file)
        assert code == 0
        doc = json.loads(out)
        assert set(doc) == {"command", "n", "evalue", "log_evalue", "decision",
                            "alpha", "seed"}
        assert doc["n"] == 20 and doc["decision"] in ("reject", "continue")

    def test_byte_identical_repeat(self, capsys, ttest_file):
        _, out1, _ = run_cli(capsys, "ttest", "--delta0", "0", "--delta1", "0.5",
                             "--input", ttest_file)
        _, out2, _ = run_cli(capsys, "ttest", "--delta0", "0", "--delta1", "0.5",
                             "--input", ttest_file)
        assert out1 == out2

    def test_stream_mode_stops_on_rejection(self, capsys, ttest_file):
        code, out, _ = run_cli(capsys, "ttest", "--delta0", "0", "--delta1", "0.8",
                               "--stream", "--input", ttest_file)
        assert code == 0
        lines = [json.loads(ln) for ln in out.splitlines()]
        assert lines[-1]["rejected"] is True
        assert all(not ln["rejected"] for ln in lines[:-1])
        assert [ln["n"] for ln in lines] == list(range(1, len(lines) + 1))

    def test_mixture_mode(self, capsys, tmp_path):
        path = tmp_path / "two.txt"
        path.write_text("0.9\n1.4\n")
        code, out, _ = run_cli(capsys, "ttest", "--delta0", "0", "--kappa", "200",
                               "--input", str(path))
        assert code == 0
        doc = json.loads(out)
        assert doc["evalue"] == pytest.approx(tt.t2_closed_form(0.9, 1.4, 200.0), rel=1e-9)

    def test_kappa_requires_null_at_zero(self, capsys, ttest_file):
        code, _, _ = run_cli(capsys, "ttest", "--delta0", "0.5", "--kappa", "200",
                             "--input", ttest_file)
        assert code == 2

    def test_missing_alternative(self, capsys, ttest_file):
        code, _, _ = run_cli(capsys, "ttest", "--delta0", "0", "--input", ttest_file)
        assert code == 2

    def test_degenerate_input_is_numeric_failure(self, capsys, tmp_path):
        path = tmp_path / "zeros.txt"
        path.write_text("0.0\n0.0\n")
        code, _, err = run_cli(capsys, "ttest", "--delta0", "0", "--delta1", "1",
                               "--input", str(path))
        assert code == 3
        assert "numeric failure" in err

    def test_csv_output(self, capsys, ttest_file):
        code, out, _ = run_cli(capsys, "ttest", "--delta0", "0", "--delta1", "0.5",
                               "--output", "csv", "--input", ttest_file)
        assert code == 0
        header, row = out.splitlines()
        assert header.split(",")[0] == "command"
        assert row.split(",")[0] == "ttest"

    def test_bad_alpha(self, capsys, ttest_file):
        code, _, _ = run_cli(capsys, "ttest", "--delta0", "0", "--delta1", "1",
                             "--alpha", "1.5", "--input", ttest_file)
        assert code == 2


class TestLtMeanCommand:
    def test_basic_run(self, capsys, tmp_path):
        rng = np.random.default_rng(1)
        path = tmp_path / "lt.csv"
        np.savetxt(path, rng.normal(0.3, 1.0, (9, 2)), delimiter=",")
        code, out, _ = run_cli(capsys, "ltmean", "--delta0", "0,0",
                               "--delta1", "0.5,0.2", "--input", str(path))
        assert code == 0
        assert json.loads(out)["n"] == 9

    def test_dimension_mismatch(self, capsys, tmp_path):
        rng = np.random.default_rng(2)
        path = tmp_path / "lt.csv"
        np.savetxt(path, rng.normal(0, 1, (9, 2)), delimiter=",")
        code, _, _ = run_cli(capsys, "ltmean", "--delta0", "0,0,0",
                             "--delta1", "0.5,0.2,0.1", "--input", str(path))
        assert code == 2


class TestRegressCommand:
    def test_basic_run(self, capsys, tmp_path):
        rng = np.random.default_rng(3)
        n, d = 12, 2
        z = rng.normal(0, 1, (n, d))
        x = rng.normal(0, 1, n)
        y = 0.6 * x + z @ [1.0, -0.4] + rng.normal(0, 1, n)
        path = tmp_path / "reg.csv"
        lines = ["y,x,z1,z2"] + [f"{y[i]},{x[i]},{z[i, 0]},{z[i, 1]}" for i in range(n)]
        path.write_text("\n".join(lines) + "\n")
        code, out, _ = run_cli(capsys, "regress", "--delta0", "0", "--delta1", "1",
                               "--input", str(path))
        assert code == 0
        assert json.loads(out)["n"] == 12

    def test_header_required(self, capsys, tmp_path):
        path = tmp_path / "reg.csv"
        path.write_text("1.0,2.0,3.0\n")
        code, _, _ = run_cli(capsys, "regress", "--delta0", "0", "--delta1", "1",
                             "--input", str(path))
        assert code == 2


class TestDualityCommand:
    def test_reports_gap(self, capsys, tmp_path):
        pair = fg.random_pair(np.random.default_rng(4))
        path = tmp_path / "inst.json"
        path.write_text(fg.pair_to_json(pair))
        code, out, _ = run_cli(capsys, "duality", "--input", str(path))
        assert code == 0
        doc = json.loads(out)
        assert abs(doc["uniform_gap"]) < 1e-12
        assert abs(doc["minimized_gap"]) < 1e-8


class TestCounterexampleCommand:
    def test_reported_estimate(self, capsys):
        code, out, _ = run_cli(capsys, "counterexample", "--kappa", "200",
                               "--a", "0.44", "--b", "1.70")
        assert code == 0
        doc = json.loads(out)
        assert 1.17 <= doc["estimate"] <= 1.21

    def test_endpoints_must_come_together(self, capsys):
        code, _, _ = run_cli(capsys, "counterexample", "--kappa", "200", "--a", "0.44")
        assert code == 2


class TestVerifyCommand:
    def test_reports_and_exit_code(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--suite", "ttest_estat",
                               "--seed", "7", "--smoke")
        assert code == 0
        lines = out.splitlines()
        assert len(lines) == 3
        for ln in lines:
            doc = json.loads(ln)
            assert doc["passed"] is True

    def test_seed_required_for_stochastic_suites(self, capsys):
        code, _, err = run_cli(capsys, "verify", "--suite", "ttest_estat")
        assert code == 2
        assert "--seed" in err

    def test_counterexample_suite_needs_no_seed(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--suite", "counterexample", "--smoke")
        assert code == 0
        assert all(json.loads(ln)["passed"] for ln in out.splitlines())

    def test_unknown_suite_is_usage_error(self, capsys):
        code, _, _ = run_cli(capsys, "verify", "--suite", "nope", "--seed", "1")
        assert code == 2

    def test_byte_identical_repeat(self, capsys):
        _, out1, _ = run_cli(capsys, "verify", "--suite", "anytime", "--seed", "3",
                             "--smoke")
        _, out2, _ = run_cli(capsys, "verify", "--suite", "anytime", "--seed", "3",
                             "--smoke")
        assert out1 == out2


class TestParser:
    def test_no_command(self, capsys):
        assert cli.main([]) == 2

    def test_unknown_command(self, capsys):
        assert cli.main(["frobnicate"]) == 2
