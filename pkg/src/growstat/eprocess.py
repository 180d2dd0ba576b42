"""Sequential e-process engine with anytime-valid threshold decisions.

The engine maintains ln T_1, ln T_2, ... where each T_n is recomputed from
the current sufficient statistics by an evaluator (never by multiplying
increments), applies the threshold test "reject once T_n >= 1/alpha", and
runs stopping rules.  Rules declared invariant-adapted only ever see the
invariant history (sample index, log e-value, invariant summary); rules
that inspect the raw data are marked unsafe, since stopping on non-invariant
information can break the e-statistic property of the stopped value.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .errors import DegenerateSampleError
from .ttest import (TSufficientStats, TTestHypotheses, log_evalue_from_moments,
                    mixture_evalue_from_moments)

__all__ = [
    "EProcessState",
    "StoppingRule",
    "StoppedRun",
    "InvariantRecord",
    "TTestEvaluator",
    "TTestMixtureEvaluator",
    "new_state",
    "update",
    "ville_decision",
    "run_with_stopping",
    "state_to_json",
]

MAX_STREAM = 10**6


@dataclass(frozen=True)
class InvariantRecord:
    """One step of the invariant filtration: (n, log e-value, summary)."""

    n: int
    log_evalue: float
    summary: Optional[float]


class TTestEvaluator:
    """Likelihood ratio of the scale-group maximal invariant, per prefix.

    At n = 1 the maximal invariant is the sign of the observation and the
    formula reduces to the likelihood ratio of that sign.
    """

    def __init__(self, delta0: float, delta1: float):
        self.hyp = TTestHypotheses(delta0, delta1)

    def new_stats(self) -> TSufficientStats:
        return TSufficientStats()

    def push(self, stats: TSufficientStats, x: float) -> None:
        stats.push(float(x))

    def log_evalue(self, stats: TSufficientStats) -> float:
        if stats.n == 0:
            return 0.0
        vbar = stats.sum_sq_dev / stats.n
        return log_evalue_from_moments(stats.n, stats.mean, vbar,
                                       self.hyp.delta0, self.hyp.delta1)

    def invariant_summary(self, stats: TSufficientStats) -> Optional[float]:
        # t-statistic once defined; before that the only invariant is the sign
        if stats.n >= 2 and stats.sum_sq_dev > 0:
            s = math.sqrt(stats.sum_sq_dev / (stats.n - 1))
            return math.sqrt(stats.n) * stats.mean / s
        if stats.n >= 1:
            return float(np.sign(stats.mean))
        return None


class TTestMixtureEvaluator:
    """Normal-mixture e-process over the effect size (null pinned at zero).

    The one-observation value is identically 1.
    """

    def __init__(self, kappa: float):
        if not kappa > 0:
            raise ValueError("prior scale must be positive")
        self.kappa = float(kappa)

    def new_stats(self) -> TSufficientStats:
        return TSufficientStats()

    def push(self, stats: TSufficientStats, x: float) -> None:
        stats.push(float(x))

    def log_evalue(self, stats: TSufficientStats) -> float:
        if stats.n <= 1:
            return 0.0
        vbar = stats.sum_sq_dev / stats.n
        return math.log(mixture_evalue_from_moments(stats.n, stats.mean, vbar, self.kappa))

    def invariant_summary(self, stats: TSufficientStats) -> Optional[float]:
        if stats.n >= 2 and stats.sum_sq_dev > 0:
            s = math.sqrt(stats.sum_sq_dev / (stats.n - 1))
            return math.sqrt(stats.n) * stats.mean / s
        return None


@dataclass
class EProcessState:
    """Running e-process: value, history, running maximum, decision record."""

    alpha: float
    n: int = 0
    log_evalue: float = 0.0
    log_history: list = field(default_factory=list)
    running_max_log: float = -math.inf
    rejected_at: Optional[int] = None
    stats: Any = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")

    @property
    def log_threshold(self) -> float:
        return math.log(1.0 / self.alpha)


def new_state(evaluator, alpha: float) -> EProcessState:
    state = EProcessState(alpha=alpha)
    state.stats = evaluator.new_stats()
    return state


def update(state: EProcessState, observation: float, evaluator) -> EProcessState:
    """Advance the e-process by one observation.

    The log e-value is recomputed from the sufficient statistics of the full
    prefix; rejection, once triggered, is permanent.
    """
    if state.n >= MAX_STREAM:
        raise ValueError(f"stream longer than {MAX_STREAM} observations")
    if state.stats is None:
        state.stats = evaluator.new_stats()
    evaluator.push(state.stats, observation)
    state.n += 1
    try:
        state.log_evalue = evaluator.log_evalue(state.stats)
    except DegenerateSampleError as exc:
        raise DegenerateSampleError(f"{exc} (at observation {state.n})") from exc
    state.log_history.append(state.log_evalue)
    if state.log_evalue > state.running_max_log:
        state.running_max_log = state.log_evalue
    if state.rejected_at is None and state.running_max_log >= state.log_threshold:
        state.rejected_at = state.n
    return state


def ville_decision(state: EProcessState) -> str:
    """'reject' once the running maximum ever reached 1/alpha, else 'continue'."""
    return "reject" if state.rejected_at is not None else "continue"


_RULE_KINDS = ("fixed_horizon", "threshold_crossing", "invariant_predicate",
               "full_data_predicate")


@dataclass(frozen=True)
class StoppingRule:
    """Stopping rule; only invariant-adapted kinds keep the optional-stopping
    guarantee for the stopped e-value."""

    kind: str
    horizon: Optional[int] = None
    predicate: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in _RULE_KINDS:
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if self.kind == "fixed_horizon" and (self.horizon is None or self.horizon < 1):
            raise ValueError("fixed_horizon requires a positive horizon")
        if self.kind in ("invariant_predicate", "full_data_predicate") and self.predicate is None:
            raise ValueError(f"{self.kind} requires a predicate")

    @property
    def adapted_to_invariant(self) -> bool:
        return self.kind != "full_data_predicate"


@dataclass(frozen=True)
class StoppedRun:
    """Outcome of running a stopping rule over a stream."""

    stopped_n: int
    stopped_evalue: float
    safe_flag: bool
    stopped: bool
    state: EProcessState


def run_with_stopping(stream, rule: StoppingRule, evaluator,
                      alpha: float = 0.05) -> StoppedRun:
    """Run until the rule fires or the stream ends.

    Invariant-adapted predicates receive only the list of InvariantRecord;
    full-data predicates receive the raw observation prefix.
    """
    state = new_state(evaluator, alpha)
    records: list[InvariantRecord] = []
    prefix: list[float] = []
    stopped = False
    for x in stream:
        prefix.append(float(x))
        update(state, x, evaluator)
        records.append(InvariantRecord(
            n=state.n, log_evalue=state.log_evalue,
            summary=evaluator.invariant_summary(state.stats)))
        if rule.kind == "fixed_horizon":
            stopped = state.n >= rule.horizon
        elif rule.kind == "threshold_crossing":
            stopped = state.running_max_log >= state.log_threshold
        elif rule.kind == "invariant_predicate":
            stopped = bool(rule.predicate(records))
        else:
            stopped = bool(rule.predicate(prefix))
        if stopped:
            break
    return StoppedRun(stopped_n=state.n, stopped_evalue=math.exp(state.log_evalue),
                      safe_flag=rule.adapted_to_invariant, stopped=stopped, state=state)


def state_to_json(state: EProcessState) -> str:
    return json.dumps({
        "n": state.n,
        "log_evalue": state.log_evalue,
        "rejected_at": state.rejected_at,
        "alpha": state.alpha,
    })
