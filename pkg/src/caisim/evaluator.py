"""Per-action cost estimation: run time and CO2 via exponential smoothing,
plus the remaining human-interaction budget.

Attributes are sampled per executed action from a truncated normal energy
model and converted to kgCO2eq through a grid carbon intensity. Estimates
feed every decision policy as (t_hat, c_hat, h_remaining) tuples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class ActionKind(Enum):
    AUTONOMOUS = "autonomous"
    HUMAN = "human"


# Italy 2023 grid intensity, gCO2 per kWh.
DEFAULT_CARBON_INTENSITY = 330.718

_SAMPLE_FLOOR = 1e-9


def smooth(prev_estimate: float, observed: float, alpha: float) -> float:
    """Exponential smoothing step: previous plus alpha times the innovation."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    return prev_estimate + alpha * (observed - prev_estimate)


def remaining_interactions(h_max: int, h_done: int, h: int) -> int:
    """Interactions still available after spending h more; may go negative."""
    if min(h_max, h_done, h) < 0:
        raise ValueError("interaction counts must be nonnegative")
    return h_max - h_done - h


@dataclass(frozen=True)
class ActionAttributes:
    """Observed cost of one executed action."""

    run_time: float       # seconds
    co2: float            # kgCO2eq
    interactions: int     # human interactions consumed


@dataclass(frozen=True)
class ActionEstimate:
    """Smoothed cost estimate plus the remaining interaction budget."""

    t_hat: float
    c_hat: float
    h_remaining: int

    @property
    def budget_exceeded(self) -> bool:
        return self.h_remaining < 0


@dataclass(frozen=True)
class SamplingParams:
    time_mean: float
    time_sigma: float
    energy_mean: float   # kWh
    energy_sigma: float


@dataclass(frozen=True)
class EnergyModel:
    """Sampling parameters per action kind and the carbon intensity.

    Defaults keep the human action slower and more energy-hungry than the
    autonomous one (a human action includes a model update).
    """

    carbon_intensity: float = DEFAULT_CARBON_INTENSITY
    autonomous: SamplingParams = SamplingParams(1.0, 0.1, 1e-6, 1e-7)
    human: SamplingParams = SamplingParams(5.0, 0.5, 3e-6, 3e-7)

    def __post_init__(self):
        if self.carbon_intensity <= 0:
            raise ValueError("carbon intensity must be positive")

    def params_for(self, kind: ActionKind) -> SamplingParams:
        return self.autonomous if kind is ActionKind.AUTONOMOUS else self.human


def sample_attributes(kind: ActionKind, energy: EnergyModel,
                      rng: np.random.Generator) -> ActionAttributes:
    """Draw run time and energy for one action; energy becomes kgCO2eq."""
    p = energy.params_for(kind)
    run_time = max(p.time_mean + p.time_sigma * rng.standard_normal(),
                   _SAMPLE_FLOOR)
    energy_kwh = max(p.energy_mean + p.energy_sigma * rng.standard_normal(),
                     _SAMPLE_FLOOR)
    co2 = energy_kwh * energy.carbon_intensity / 1000.0
    h = 0 if kind is ActionKind.AUTONOMOUS else 1
    return ActionAttributes(run_time=run_time, co2=co2, interactions=h)


@dataclass
class ActionEstimator:
    """Tracks smoothed (t_hat, c_hat) per action and the shared budget.

    The first observation of an action seeds its estimate; before any
    observation the configured sampling means stand in, so policies always
    see a full estimate set.
    """

    energy: EnergyModel
    alpha: float = 0.5
    h_max: int = 1000
    h_done: int = 0
    _t_hat: dict = field(default_factory=dict)
    _c_hat: dict = field(default_factory=dict)

    def observe(self, kind: ActionKind, attrs: ActionAttributes) -> None:
        if kind in self._t_hat:
            self._t_hat[kind] = smooth(self._t_hat[kind], attrs.run_time, self.alpha)
            self._c_hat[kind] = smooth(self._c_hat[kind], attrs.co2, self.alpha)
        else:
            self._t_hat[kind] = attrs.run_time
            self._c_hat[kind] = attrs.co2
        self.h_done += attrs.interactions

    def estimate(self, kind: ActionKind) -> ActionEstimate:
        p = self.energy.params_for(kind)
        t_hat = self._t_hat.get(kind, p.time_mean)
        c_hat = self._c_hat.get(
            kind, p.energy_mean * self.energy.carbon_intensity / 1000.0)
        h = 0 if kind is ActionKind.AUTONOMOUS else 1
        return ActionEstimate(t_hat=t_hat, c_hat=c_hat,
                              h_remaining=remaining_interactions(
                                  self.h_max, self.h_done, h))

    def estimates(self) -> dict[ActionKind, ActionEstimate]:
        return {kind: self.estimate(kind) for kind in ActionKind}
