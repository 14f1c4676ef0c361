"""Experiment orchestration: steady-state training, disruption injection,
policy-supported recovery, the stop-support and fix-event rules, multi-cycle
disruptions, replication batches, and CSV persistence.

A run advances one iteration at a time so it can be driven flat out by the
CLI or paced and steered live by the HTTP service; both paths produce
byte-identical CSV output for the same configuration and seed.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .evaluator import ActionEstimator, ActionKind, sample_attributes
from .learner import OnlineClassifier, confidence_threshold
from .measurements import (MetricsReport, Segment, compare_policies,
                           compute_cycle_metrics, extract_segments,
                           group_reports)
from .policies import POLICY_NAMES, internal_select
from .policies.game import build_payoff_matrix, game_select
from .policies.rl import ActionObservation, QTable, RecoveryAgent
from .policies.wsm import ahp_weights, wsm_select
from .resilience import AcrTrace, AcrWindow, StateTracker, SystemState
from .simulator import Feeder, ObjectStream, make_disruptor


@dataclass(frozen=True)
class IterationRecord:
    """One audit row per iteration."""

    iteration: int
    mode: str
    policy_active: str
    action_kind: str
    t: float
    c: float
    h: int
    p_hat: float
    predicted_class: str
    true_class: str
    acr: float
    state_name: str
    cycle: int

    FIELDS = ("iteration", "mode", "policy_active", "action_kind", "t", "c",
              "h", "p_hat", "predicted_class", "true_class", "acr",
              "state_name", "cycle")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[IterationRecord]
    segments: list[Segment]
    metrics: list[MetricsReport]
    recovered: dict[int, bool]
    acr_threshold: float | None
    fix_events: list[int]
    completion: str  # "completed" or "budget-exhausted"


_CLASS_NAMES = ("red", "green", "blue")


class ExperimentRun:
    """Stepwise experiment execution with live-control hooks.

    Three independent seeded streams keep the object stream, the attribute
    sampler, and the policy randomness decoupled, so the instance sequence
    depends only on (seed, schedule).
    """

    def __init__(self, config: ExperimentConfig):
        config.validate()
        self.config = config
        seeds = np.random.SeedSequence(config.seed).spawn(3)
        self._stream_rng, self._attr_rng, self._policy_rng = (
            np.random.default_rng(s) for s in seeds)

        self.feeder = Feeder(
            ObjectStream(self._stream_rng, n_classes=config.n_classes,
                         order=config.class_order),
            make_disruptor(config.disruptor))
        self.model = OnlineClassifier(
            n_classes=config.n_classes, learning_rate=config.learner.learning_rate,
            l2_penalty=config.learner.l2_penalty)
        self.k = confidence_threshold(config.n_classes)
        self.window = AcrWindow(config.m)
        self.tracker = StateTracker(satisfactory=config.satisfactory)
        self.trace = AcrTrace()
        self.energy = config.evaluator.energy_model()
        self.estimator = ActionEstimator(self.energy, alpha=config.evaluator.alpha,
                                         h_max=config.evaluator.h_max)
        self.policy_name = config.policy
        self._wsm_weights = self._resolve_weights(config)
        self.q_table = QTable(rl_alpha=config.policy_params.rl_alpha,
                              gamma=config.policy_params.gamma,
                              epsilon=config.policy_params.epsilon,
                              state_weights=config.policy_params.state_weights)
        self.agent = RecoveryAgent(self.q_table, self._policy_rng,
                                   steady_duration=config.steady_len)

        # Disruption scheduling
        self.disrupted = False
        self._pending_windows = config.cycles if config.auto_schedule else 0
        self._next_disrupt_at = (config.effective_disrupt_start
                                 if config.auto_schedule else None)
        self._disrupt_started_at: int | None = None
        self._fix_at: int | None = None
        self._manual_window = False
        self._explicit_fix_used = False
        self.fix_events: list[int] = []
        self._manual_disrupt: dict | None = None
        self._manual_fix = False
        self._end_at: int | None = None

        # Support-policy episode state
        self._supporting = False
        self._support_stopped = False
        self._standalone_streak = 0
        self._pd: list[ActionObservation] = []

        self.records: list[IterationRecord] = []
        self.finished = False
        self.completion: str | None = None

    @staticmethod
    def _resolve_weights(config: ExperimentConfig) -> tuple[float, float]:
        matrix = config.policy_params.comparison_matrix
        if matrix is None:
            return config.policy_params.weights
        weights, cr = ahp_weights(matrix)
        if cr > 0.1:
            raise ValueError(f"comparison matrix inconsistent: ratio {cr:.3f} > 0.1")
        return float(weights[0]), float(weights[1])

    # -- live control -----------------------------------------------------

    @property
    def next_iteration(self) -> int:
        return self.feeder.iteration

    def set_policy(self, name: str) -> None:
        if name not in POLICY_NAMES:
            raise ValueError(f"unknown policy {name!r}")
        self.policy_name = name

    def inject_disruption(self, spec: dict | None = None) -> None:
        if self.disrupted or self._manual_disrupt is not None:
            raise RuntimeError("a disruption is already active")
        self._manual_disrupt = spec or {}

    def fix_disruption(self) -> None:
        if not self.disrupted:
            raise RuntimeError("no active disruption to fix")
        self._manual_fix = True

    # -- execution --------------------------------------------------------

    def step(self) -> IterationRecord | None:
        """Run one iteration; None once the run has finished."""
        if self.finished:
            return None
        i = self.feeder.iteration

        self._apply_schedule(i)
        self.feeder.disrupted = self.disrupted

        instance = self.feeder.next_instance()
        estimate = self.model.predict_proba(instance.features)
        standalone = estimate.p_hat >= self.k

        state_before = self.tracker.current
        acting = self._acting_policy(state_before)
        action = self._decide(acting, estimate.p_hat)

        attrs = sample_attributes(action, self.energy, self._attr_rng)
        if action is ActionKind.HUMAN:
            self.model.update(instance.features, instance.true_class)
        self.estimator.observe(action, attrs)

        acr = self.window.record(standalone)
        state = self.tracker.observe(i, acr)
        self.trace.append(i, acr, state, self.tracker.cycle)

        if acting == self.policy_name and self._supporting:
            self._standalone_streak = self._standalone_streak + 1 if standalone else 0
            if self._standalone_streak >= self.config.effective_stop_support:
                self._support_stopped = True
        if acting == "rl-agent":
            self.agent.observe(action, attrs.co2, attrs.run_time, estimate.p_hat)

        self._track_degradation_window(state, acr, action, attrs, estimate.p_hat)
        self._handle_transitions(i, state_before, state)

        record = IterationRecord(
            iteration=i,
            mode=instance.mode.value,
            policy_active=acting,
            action_kind=action.value,
            t=attrs.run_time,
            c=attrs.co2,
            h=attrs.interactions,
            p_hat=estimate.p_hat,
            predicted_class=_CLASS_NAMES[estimate.predicted_class],
            true_class=instance.true_class.name.lower(),
            acr=acr,
            state_name=state.label,
            cycle=self.tracker.cycle,
        )
        self.records.append(record)

        self._schedule_after(i, state)
        return record

    def run(self) -> "ExperimentRun":
        while self.step() is not None:
            pass
        return self

    # -- internals ----------------------------------------------------------

    def _apply_schedule(self, i: int) -> None:
        if self._manual_disrupt is not None:
            spec = self._manual_disrupt
            self._manual_disrupt = None
            if spec:
                self.feeder.disruptor = make_disruptor(spec)
            self._start_disruption(i, consume_window=False)
        elif (not self.disrupted and self._next_disrupt_at is not None
              and i >= self._next_disrupt_at):
            self._start_disruption(i, consume_window=True)

        if self.disrupted:
            force_at = (None if self._disrupt_started_at is None
                        else self._disrupt_started_at + 2 * self.config.steady_len)
            if self._manual_fix:
                self._manual_fix = False
                self._finish_disruption(i)
            elif self._fix_at is not None and i >= self._fix_at:
                self._finish_disruption(i)
            elif (not self._manual_window and self._fix_at is None
                  and force_at is not None and i >= force_at):
                self._finish_disruption(i)

    def _start_disruption(self, i: int, consume_window: bool) -> None:
        self.disrupted = True
        self._disrupt_started_at = i
        self._next_disrupt_at = None
        self._manual_window = not consume_window
        if consume_window:
            self._pending_windows -= 1
        if (consume_window and self.config.fix_at is not None
                and not self._explicit_fix_used):
            self._fix_at = self.config.fix_at
            self._explicit_fix_used = True
        else:
            self._fix_at = None

    def _finish_disruption(self, i: int) -> None:
        self.disrupted = False
        self._fix_at = None
        self._disrupt_started_at = None
        self.fix_events.append(i)

    def _acting_policy(self, state_before: SystemState) -> str:
        if (state_before is SystemState.RECOVERING and self._supporting
                and not self._support_stopped):
            return self.policy_name
        return "internal"

    def _decide(self, acting: str, p_hat: float) -> ActionKind:
        if acting == "internal":
            return internal_select(p_hat, self.k)
        if acting == "one-agent":
            return wsm_select(p_hat, self.estimator.estimates(), self._wsm_weights)
        if acting == "two-agent":
            matrix = build_payoff_matrix(p_hat, self.estimator.estimates())
            return game_select(matrix, p_hat=p_hat, k=self.k)
        if acting == "rl-agent":
            return self.agent.select()
        raise ValueError(f"unknown policy {acting!r}")

    def _track_degradation_window(self, state: SystemState, acr: float,
                                  action: ActionKind, attrs, p_hat: float) -> None:
        obs = ActionObservation(action, attrs.co2, attrs.run_time, p_hat)
        if state is SystemState.STEADY:
            if acr < self.tracker.satisfactory:
                self._pd.append(obs)
            else:
                self._pd.clear()
        elif state is SystemState.PERFORMANCE_DEGRADATION:
            self._pd.append(obs)

    def _handle_transitions(self, i: int, before: SystemState,
                            after: SystemState) -> None:
        if before is not after:
            if after is SystemState.RECOVERING:
                self._supporting = True
                self._support_stopped = False
                self._standalone_streak = 0
                self.agent.begin_recovery(self._pd)
                self._pd.clear()
            elif before is SystemState.RECOVERING:
                self._supporting = False
                self.agent.end_recovery()

    def _schedule_after(self, i: int, state: SystemState) -> None:
        recovered_now = state is SystemState.RECOVERED
        if self.disrupted:
            if recovered_now and self._fix_at is None and not self._manual_window:
                self._fix_at = i + self.config.steady_len
        elif self.fix_events:
            if self._pending_windows > 0:
                if self._next_disrupt_at is None:
                    if recovered_now:
                        self._next_disrupt_at = i + self.config.steady_len
                    elif i >= self.fix_events[-1] + 2 * self.config.steady_len:
                        self._next_disrupt_at = i + 1
            elif recovered_now and self._end_at is None:
                self._end_at = i + self.config.steady_len

        if self._end_at is not None and i + 1 >= self._end_at:
            self.finished = True
            self.completion = "completed"
        elif i + 1 >= self.config.iteration_budget:
            self.finished = True
            self.completion = "budget-exhausted"

    # -- results ------------------------------------------------------------

    def result(self) -> ExperimentResult:
        states = [p.state for p in self.trace.points]
        cycles = [p.cycle for p in self.trace.points]
        segments = extract_segments(states, cycles)
        threshold = (self.tracker.acr_threshold
                     if self.tracker.acr_threshold > 0.0 else None)
        metrics: list[MetricsReport] = []
        if threshold is not None:
            metrics = compute_cycle_metrics(
                policy=self.config.policy, seed=self.config.seed,
                segments=segments, acrs=self.trace.acrs(),
                co2_values=[r.c for r in self.records],
                interaction_counts=[r.h for r in self.records],
                threshold=threshold, fix_events=self.fix_events)
        recovered = {}
        for s in segments:
            if s.state is SystemState.PERFORMANCE_DEGRADATION:
                recovered.setdefault(s.cycle, False)
            if s.state is SystemState.RECOVERED:
                recovered[s.cycle] = True
        return ExperimentResult(
            config=self.config, records=self.records, segments=segments,
            metrics=metrics, recovered=recovered, acr_threshold=threshold,
            fix_events=self.fix_events,
            completion=self.completion or "completed")


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    return ExperimentRun(config).run().result()


def run_replications(config: ExperimentConfig, count: int
                     ) -> tuple[list[ExperimentResult], list[dict]]:
    """Replication i runs with seed = base seed + i; returns results and the
    per-policy comparison rows over all cycle metrics."""
    if count < 1:
        raise ValueError("replication count must be >= 1")
    results = []
    for i in range(count):
        cfg = replace_seed(config, config.seed + i)
        results.append(run_experiment(cfg))
    reports = [m for r in results for m in r.metrics]
    comparison = compare_policies(group_reports(reports))
    for row in comparison:
        row.update(mean_state_lengths(results))
    return results, comparison


def replace_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    return replace(config, seed=seed)


def mean_state_lengths(results: list[ExperimentResult]) -> dict[str, float]:
    """Average iterations spent per state across runs."""
    totals: dict[str, float] = {}
    for state in SystemState:
        if state is SystemState.UNSTARTED:
            continue
        per_run = [sum(len(s) for s in r.segments if s.state is state)
                   for r in results]
        totals[f"mean_{state.label}_len"] = sum(per_run) / len(per_run)
    return totals


# -- CSV output ------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def render_iterations_csv(records: list[IterationRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(IterationRecord.FIELDS)
    for r in records:
        writer.writerow([_fmt(getattr(r, f)) for f in IterationRecord.FIELDS])
    return buf.getvalue()


METRICS_FIELDS = ("policy", "seed", "cycle", "duration_ratio",
                  "fluctuation_ratio", "co2_mean", "human_dependency")


def render_metrics_csv(metrics: list[MetricsReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(METRICS_FIELDS)
    for m in metrics:
        writer.writerow([_fmt(getattr(m, f)) for f in METRICS_FIELDS])
    return buf.getvalue()


def render_segments_csv(segments: list[Segment]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["cycle", "state", "start", "end"])
    for s in segments:
        writer.writerow([s.cycle, s.state.label, s.start, s.end])
    return buf.getvalue()


def dump_csv(result: ExperimentResult, directory: str | Path) -> dict[str, Path]:
    """Write iterations.csv, metrics.csv and segments.csv; returns the paths."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {}
        for name, text in (("iterations.csv", render_iterations_csv(result.records)),
                           ("metrics.csv", render_metrics_csv(result.metrics)),
                           ("segments.csv", render_segments_csv(result.segments))):
            path = out / name
            path.write_text(text, newline="")
            paths[name] = path
        return paths
    except OSError as exc:
        raise OSError(f"cannot write results under {out}: {exc}") from exc
