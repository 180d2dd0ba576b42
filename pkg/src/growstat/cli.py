"""Command-line front end.

Subcommands:

* ``ttest``          one-sample scale-invariant test; ``--stream`` runs the
                     sequential engine, one JSON state line per observation
* ``ltmean``         multivariate mean test (lower-triangular invariance)
* ``regress``        standardized regression-coefficient test
* ``duality``        finite-group duality report for a JSON instance
* ``counterexample`` deterministic stopped-mean of the two-step mixture rule
* ``verify``         named verification suite as JSON-lines reports

Exit codes: 0 success (for ``verify``: all checks passed), 1 failed checks,
2 usage error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .errors import GrowstatError
from . import eprocess as ep
from . import finite_group as fg
from . import lt_group as lt
from . import regression as rg
from . import ttest as tt
from . import verify as vf

__all__ = ["main", "build_parser"]


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated vector: {text!r}") from exc


def _alpha(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="growstat",
                                     description="Growth-optimal e-statistics for "
                                                 "group-invariant tests")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ttest", help="one-sample scale-invariant t-test e-value")
    p.add_argument("--delta0", type=float, required=True)
    p.add_argument("--delta1", type=float)
    p.add_argument("--kappa", type=float,
                   help="use the normal-mixture alternative with this prior scale "
                        "(requires --delta0 0)")
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--input", help="one observation per line (default: stdin)")
    p.add_argument("--stream", action="store_true",
                   help="sequential mode: one JSON state line per observation")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", choices=("json", "csv"), default="json")

    p = sub.add_parser("ltmean", help="multivariate mean-test e-value")
    p.add_argument("--delta0", type=_parse_vector, required=True)
    p.add_argument("--delta1", type=_parse_vector, required=True)
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--input", help="CSV, one d-dimensional observation per row")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", choices=("json", "csv"), default="json")

    p = sub.add_parser("regress", help="regression-coefficient e-value")
    p.add_argument("--delta0", type=float, required=True)
    p.add_argument("--delta1", type=float, required=True)
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--input", help="CSV with header y,x,z1..zd")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", choices=("json", "csv"), default="json")

    p = sub.add_parser("duality", help="finite-group duality report")
    p.add_argument("--input", required=True, help="instance JSON document")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iters", type=int, default=20_000)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("counterexample",
                       help="stopped mean of the two-step mixture rule")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True, choices=vf.SUITE_NAMES)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--smoke", action="store_true",
                   help="reduced replication counts, reports tagged @smoke")
    return parser


def _read_lines(path):
    if path is None:
        return sys.stdin.read().splitlines()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


def _read_column(path) -> np.ndarray:
    rows = [ln.strip() for ln in _read_lines(path)]
    return np.array([float(r) for r in rows if r])


def _read_matrix(path) -> np.ndarray:
    rows = [ln.strip() for ln in _read_lines(path)]
    return np.array([[float(v) for v in r.split(",")] for r in rows if r])


def _emit_result(args, n, evalue, log_evalue) -> None:
    decision = "reject" if evalue >= 1.0 / args.alpha else "continue"
    record = {
        "command": args.command,
        "n": int(n),
        "evalue": float(evalue),
        "log_evalue": float(log_evalue),
        "decision": decision,
        "alpha": args.alpha,
        "seed": args.seed,
    }
    if args.output == "csv":
        keys = list(record)
        print(",".join(keys))
        print(",".join("" if record[k] is None else str(record[k]) for k in keys))
    else:
        print(json.dumps(record))


def _cmd_ttest(args) -> int:
    if args.kappa is None and args.delta1 is None:
        raise SystemExit(_usage_error("ttest needs --delta1 or --kappa"))
    if args.kappa is not None:
        if args.delta0 != 0.0:
            raise SystemExit(_usage_error("--kappa requires --delta0 0"))
        evaluator = ep.TTestMixtureEvaluator(args.kappa)
    else:
        evaluator = ep.TTestEvaluator(args.delta0, args.delta1)
    data = _read_column(args.input)
    if data.size == 0:
        raise SystemExit(_usage_error("empty input"))
    if args.stream:
        state = ep.new_state(evaluator, args.alpha)
        for x in data:
            ep.update(state, float(x), evaluator)
            rejected = state.rejected_at is not None
            print(json.dumps({
                "command": "ttest",
                "n": state.n,
                "evalue": math.exp(state.log_evalue),
                "log_evalue": state.log_evalue,
                "rejected": rejected,
                "alpha": args.alpha,
                "seed": args.seed,
            }))
            if rejected:
                break
        return 0
    state = ep.new_state(evaluator, args.alpha)
    for x in data:
        ep.update(state, float(x), evaluator)
    _emit_result(args, state.n, math.exp(state.log_evalue), state.log_evalue)
    return 0


def _cmd_ltmean(args) -> int:
    data = _read_matrix(args.input)
    if data.ndim != 2:
        raise SystemExit(_usage_error("ltmean expects a CSV matrix"))
    if args.delta0.shape != args.delta1.shape or args.delta0.size != data.shape[1]:
        raise SystemExit(_usage_error("effect-size vectors must match the data dimension"))
    summary = lt.LTSampleSummary.from_data(data)
    log_e = lt.log_evalue_lt(summary, args.delta0, args.delta1)
    _emit_result(args, summary.n, math.exp(log_e), log_e)
    return 0


def _cmd_regress(args) -> int:
    rows = [ln.strip() for ln in _read_lines(args.input)]
    rows = [r for r in rows if r]
    if not rows:
        raise SystemExit(_usage_error("empty input"))
    header = [h.strip().lower() for h in rows[0].split(",")]
    if header[:2] != ["y", "x"]:
        raise SystemExit(_usage_error("regress input must have header y,x,z1..zd"))
    body = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
    data = rg.RegressionData(y=body[:, 0], x=body[:, 1], z=body[:, 2:])
    log_e = rg.log_evalue_regression(data, args.delta0, args.delta1)
    _emit_result(args, data.n, math.exp(log_e), log_e)
    return 0


def _cmd_duality(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        pair = fg.pair_from_json(fh.read())
    klm = fg.kl_maximal_invariant(pair)
    uniform = fg.joint_kl(pair, fg.PriorPair.uniform(pair.action.group.order))
    priors, value = fg.joint_kl_minimize(pair, tol=args.tol, max_iters=args.max_iters)
    print(json.dumps({
        "command": "duality",
        "kl_maximal_invariant": klm,
        "joint_kl_uniform": uniform,
        "uniform_gap": uniform - klm,
        "minimized_value": value,
        "minimized_gap": value - klm,
        "pi0": priors.pi0.tolist(),
        "pi1": priors.pi1.tolist(),
        "seed": args.seed,
    }))
    return 0


def _cmd_counterexample(args) -> int:
    if (args.a is None) != (args.b is None):
        raise SystemExit(_usage_error("give both --a and --b, or neither"))
    if args.a is None:
        a, b = vf.find_unit_crossings(args.kappa)
    else:
        a, b = args.a, args.b
    estimate = vf.counterexample_expectation(args.kappa, a, b)
    print(json.dumps({
        "command": "counterexample",
        "kappa": args.kappa,
        "a": a,
        "b": b,
        "estimate": estimate,
        "seed": args.seed,
    }))
    return 0


def _cmd_verify(args) -> int:
    if args.seed is None:
        if args.suite in vf.STOCHASTIC_SUITES:
            raise SystemExit(_usage_error(f"--seed is required for suite {args.suite!r}"))
        args.seed = 0
    reports = vf.run_suite(args.suite, args.seed, smoke=args.smoke, threads=args.threads)
    for r in reports:
        print(r.to_json_line())
    return 0 if all(r.passed for r in reports) else 1


def _usage_error(message: str) -> int:
    print(f"growstat: error: {message}", file=sys.stderr)
    return 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    handlers = {
        "ttest": _cmd_ttest,
        "ltmean": _cmd_ltmean,
        "regress": _cmd_regress,
        "duality": _cmd_duality,
        "counterexample": _cmd_counterexample,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except GrowstatError as exc:
        print(f"growstat: numeric failure: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"growstat: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
