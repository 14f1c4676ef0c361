"""RL-agent policy: tabular Q-learning over rounded cost-accumulation states.

The agent runs only while the system is recovering. Episodes accumulate an
action vector of (kind, co2, run_time, confidence) observations; the state is
the weighted sum of accumulated CO2 and run time, rounded to two decimals,
and the reward is the product of observed confidences divided by the vector
length. Episodes end on the first autonomous action or after as many steps
as the steady state lasted.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ..evaluator import ActionKind

ACTIONS = (ActionKind.AUTONOMOUS, ActionKind.HUMAN)


class ActionObservation(NamedTuple):
    kind: ActionKind
    co2: float
    run_time: float
    p_hat: float


def round_half_up(x: float) -> float:
    """Round to two decimals with exact half-up semantics on the printed value."""
    return float(Decimal(repr(float(x))).quantize(Decimal("0.01"),
                                                  rounding=ROUND_HALF_UP))


def rl_state(av: list[ActionObservation],
             state_weights: tuple[float, float] = (0.5, 0.5)) -> float:
    """Weighted accumulated cost, w_g over CO2 plus w_r over run time, rounded."""
    w_g, w_r = state_weights
    total = w_g * sum(o.co2 for o in av) + w_r * sum(o.run_time for o in av)
    return round_half_up(total)


def rl_reward(av: list[ActionObservation]) -> float:
    """Product of all observed confidences divided by the vector length."""
    if not av:
        raise ValueError("reward needs a nonempty action vector")
    product = 1.0
    for o in av:
        product *= o.p_hat
    return product / len(av)


@dataclass
class QTable:
    """State-action values keyed by rounded state; missing entries read 0."""

    rl_alpha: float = 0.1
    gamma: float = 0.9
    epsilon: float = 0.1
    state_weights: tuple[float, float] = (0.5, 0.5)
    _values: dict[float, dict[ActionKind, float]] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.rl_alpha <= 1.0:
            raise ValueError("rl_alpha must be in (0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")

    def get(self, state: float, action: ActionKind) -> float:
        return self._values.get(state, {}).get(action, 0.0)

    def max_value(self, state: float) -> float:
        return max(self.get(state, a) for a in ACTIONS)

    def update(self, state: float, action: ActionKind, reward: float,
               next_state: float) -> float:
        """Temporal-difference step; returns the new value."""
        current = self.get(state, action)
        target = reward + self.gamma * self.max_value(next_state)
        value = current + self.rl_alpha * (target - current)
        self._values.setdefault(state, {})[action] = value
        return value

    def best_action(self, state: float) -> ActionKind:
        """Greedy action; an exact tie prefers the human action, which is the
        only one that can add labeled data."""
        q_auto = self.get(state, ActionKind.AUTONOMOUS)
        q_human = self.get(state, ActionKind.HUMAN)
        return ActionKind.AUTONOMOUS if q_auto > q_human else ActionKind.HUMAN

    def states(self) -> list[float]:
        return sorted(self._values)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["state", "q_autonomous", "q_human"])
            for s in self.states():
                writer.writerow([f"{s:.2f}",
                                 repr(self.get(s, ActionKind.AUTONOMOUS)),
                                 repr(self.get(s, ActionKind.HUMAN))])


def q_update(table: QTable, state: float, action: ActionKind, reward: float,
             next_state: float) -> QTable:
    table.update(state, action, reward, next_state)
    return table


class RecoveryAgent:
    """Drives epsilon-greedy selection and learning inside recovering states.

    The initial state of each recovery comes from the actions executed during
    the preceding degradation window. The Q-table persists across recoveries,
    so the agent keeps what it learned through earlier disruptions.
    """

    def __init__(self, table: QTable, rng: np.random.Generator,
                 steady_duration: int):
        if steady_duration < 1:
            raise ValueError("steady_duration must be >= 1")
        self.table = table
        self.rng = rng
        self.steady_duration = steady_duration
        self.state = 0.0
        self._av: list[ActionObservation] = []
        self._steps = 0

    def begin_recovery(self, pd: list[ActionObservation]) -> None:
        self.state = rl_state(pd, self.table.state_weights)
        self._av = []
        self._steps = 0

    def select(self) -> ActionKind:
        if self.rng.random() < self.table.epsilon:
            return ACTIONS[int(self.rng.integers(len(ACTIONS)))]
        return self.table.best_action(self.state)

    def observe(self, kind: ActionKind, co2: float, run_time: float,
                p_hat: float) -> None:
        """Fold one actuated action into the episode and update the table."""
        self._av.append(ActionObservation(kind, co2, run_time, p_hat))
        next_state = rl_state(self._av, self.table.state_weights)
        reward = rl_reward(self._av)
        self.table.update(self.state, kind, reward, next_state)
        self.state = next_state
        if kind is ActionKind.AUTONOMOUS:
            self._end_episode()
        else:
            self._steps += 1
            if self._steps >= self.steady_duration:
                self._end_episode()

    def _end_episode(self) -> None:
        self._av = []
        self._steps = 0

    def end_recovery(self) -> None:
        self._end_episode()
