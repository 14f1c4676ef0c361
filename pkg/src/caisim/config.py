"""Experiment configuration: a versioned JSON document shared by the CLI and
the HTTP service, validated field by field."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .evaluator import EnergyModel, SamplingParams

SCHEMA_VERSION = 1

POLICY_NAMES = ("internal", "one-agent", "two-agent", "rl-agent")
CLASS_ORDERS = ("round-robin", "shuffle")


class ConfigError(ValueError):
    def __init__(self, fieldname: str, message: str):
        self.field = fieldname
        super().__init__(f"{fieldname}: {message}")


@dataclass
class LearnerParams:
    # With the confidence threshold K(3) ~ 0.3833, any rate above
    # ln(2K/(1-K)) ~ 0.218 makes the very first labeled update push softmax
    # confidence over K for every input (the bias gap alone reaches the rate,
    # and histogram feature dots are nonnegative), freezing all learning.
    # 0.07 keeps the confidence-gated loop live.
    learning_rate: float = 0.07
    l2_penalty: float = 1e-4


@dataclass
class ActionSampling:
    time_mean: float
    time_sigma: float
    energy_mean: float
    energy_sigma: float


@dataclass
class EvaluatorParams:
    alpha: float = 0.5
    h_max: int = 1000
    carbon_intensity: float = 330.718
    autonomous: ActionSampling = field(
        default_factory=lambda: ActionSampling(1.0, 0.1, 1e-6, 1e-7))
    human: ActionSampling = field(
        default_factory=lambda: ActionSampling(5.0, 0.5, 3e-6, 3e-7))

    def energy_model(self) -> EnergyModel:
        return EnergyModel(
            carbon_intensity=self.carbon_intensity,
            autonomous=SamplingParams(self.autonomous.time_mean,
                                      self.autonomous.time_sigma,
                                      self.autonomous.energy_mean,
                                      self.autonomous.energy_sigma),
            human=SamplingParams(self.human.time_mean, self.human.time_sigma,
                                 self.human.energy_mean, self.human.energy_sigma))


@dataclass
class PolicyParams:
    weights: tuple[float, float] = (0.5, 0.5)
    comparison_matrix: list | None = None  # optional pairwise matrix for the weights
    rl_alpha: float = 0.1
    gamma: float = 0.9
    epsilon: float = 0.1
    state_weights: tuple[float, float] = (0.5, 0.5)


@dataclass
class ExperimentConfig:
    """Everything a run needs; identical configs and seeds replay identically."""

    seed: int = 42
    m: int = 5
    steady_len: int = 30
    policy: str = "internal"
    n_classes: int = 3
    cycles: int = 1
    disruptor: dict = field(default_factory=lambda: {"kind": "darkness", "factor": 0.2})
    auto_schedule: bool = True
    disrupt_start: int | None = None   # default: steady_len
    fix_at: int | None = None          # explicit fix; default: recovery rule
    class_order: str = "round-robin"
    satisfactory: float = 0.5
    stop_support_after: int | None = None  # default: m
    budget_per_cycle: int = 600
    pace_hz: float = 20.0              # live-run pacing; 0 means unthrottled
    learner: LearnerParams = field(default_factory=LearnerParams)
    evaluator: EvaluatorParams = field(default_factory=EvaluatorParams)
    policy_params: PolicyParams = field(default_factory=PolicyParams)

    @property
    def effective_disrupt_start(self) -> int:
        return self.disrupt_start if self.disrupt_start is not None else self.steady_len

    @property
    def effective_stop_support(self) -> int:
        return self.stop_support_after if self.stop_support_after is not None else self.m

    @property
    def iteration_budget(self) -> int:
        return self.budget_per_cycle * self.cycles

    def validate(self) -> None:
        if self.m < 1:
            raise ConfigError("m", "window size must be >= 1")
        if self.steady_len < self.m:
            raise ConfigError("steady_len", "must be >= m")
        if self.policy not in POLICY_NAMES:
            raise ConfigError("policy", f"must be one of {POLICY_NAMES}")
        if self.n_classes < 2:
            raise ConfigError("n_classes", "must be >= 2")
        if self.cycles < 1:
            raise ConfigError("cycles", "must be >= 1")
        if self.class_order not in CLASS_ORDERS:
            raise ConfigError("class_order", f"must be one of {CLASS_ORDERS}")
        if not 0.0 < self.satisfactory <= 1.0:
            raise ConfigError("satisfactory", "must be in (0, 1]")
        if self.budget_per_cycle < 1:
            raise ConfigError("budget_per_cycle", "must be >= 1")
        if self.pace_hz < 0:
            raise ConfigError("pace_hz", "must be >= 0")
        if self.disrupt_start is not None and self.disrupt_start < self.steady_len:
            raise ConfigError("disrupt_start", "must be >= steady_len")
        if self.fix_at is not None and self.fix_at <= self.effective_disrupt_start:
            raise ConfigError("fix_at", "must be > the disruption start")
        if self.stop_support_after is not None and self.stop_support_after < 1:
            raise ConfigError("stop_support_after", "must be >= 1")
        kind = self.disruptor.get("kind")
        if kind not in ("darkness", "histogram_equalization"):
            raise ConfigError("disruptor.kind", "must be darkness or histogram_equalization")
        if kind == "darkness":
            factor = self.disruptor.get("factor", 0.2)
            if not 0.0 < factor <= 1.0:
                raise ConfigError("disruptor.factor", "must be in (0, 1]")
        if self.learner.learning_rate <= 0:
            raise ConfigError("learner.learning_rate", "must be positive")
        if self.learner.l2_penalty < 0:
            raise ConfigError("learner.l2_penalty", "must be nonnegative")
        if not 0.0 < self.evaluator.alpha <= 1.0:
            raise ConfigError("evaluator.alpha", "must be in (0, 1]")
        if self.evaluator.h_max < 0:
            raise ConfigError("evaluator.h_max", "must be nonnegative")
        if self.evaluator.carbon_intensity <= 0:
            raise ConfigError("evaluator.carbon_intensity", "must be positive")
        p = self.policy_params
        if abs(p.weights[0] + p.weights[1] - 1.0) > 1e-9 or min(p.weights) < 0:
            raise ConfigError("policy_params.weights", "must be nonnegative and sum to 1")
        if not 0.0 < p.rl_alpha <= 1.0:
            raise ConfigError("policy_params.rl_alpha", "must be in (0, 1]")
        if not 0.0 <= p.gamma <= 1.0:
            raise ConfigError("policy_params.gamma", "must be in [0, 1]")
        if p.epsilon <= 0:
            raise ConfigError("policy_params.epsilon", "must be positive")

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["schema_version"] = SCHEMA_VERSION
        doc["policy_params"]["weights"] = list(self.policy_params.weights)
        doc["policy_params"]["state_weights"] = list(self.policy_params.state_weights)
        return doc


def _build_section(cls, doc: dict, prefix: str):
    known = set(cls.__dataclass_fields__)
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"{prefix}{sorted(unknown)[0]}", "unknown field")
    return doc


def from_dict(doc: dict) -> ExperimentConfig:
    doc = dict(doc)
    version = doc.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version}")

    def section(name, cls, nested=()):
        raw = doc.pop(name, None)
        if raw is None:
            return cls()
        if not isinstance(raw, dict):
            raise ConfigError(name, "must be an object")
        raw = dict(raw)
        for sub, sub_cls in nested:
            if sub in raw and isinstance(raw[sub], dict):
                _build_section(sub_cls, raw[sub], f"{name}.{sub}.")
                raw[sub] = sub_cls(**raw[sub])
        _build_section(cls, {k: v for k, v in raw.items()}, f"{name}.")
        return cls(**raw)

    learner = section("learner", LearnerParams)
    evaluator = section("evaluator", EvaluatorParams,
                        nested=[("autonomous", ActionSampling), ("human", ActionSampling)])
    policy_params = section("policy_params", PolicyParams)
    if isinstance(policy_params.weights, list):
        policy_params.weights = tuple(policy_params.weights)
    if isinstance(policy_params.state_weights, list):
        policy_params.state_weights = tuple(policy_params.state_weights)

    _build_section(ExperimentConfig, doc, "")
    cfg = ExperimentConfig(learner=learner, evaluator=evaluator,
                           policy_params=policy_params, **doc)
    cfg.validate()
    return cfg


def load(path: str | Path) -> ExperimentConfig:
    with open(path) as fh:
        return from_dict(json.load(fh))


def dump(cfg: ExperimentConfig, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
        fh.write("\n")
