"""Autonomy-ratio tracking and the operational state machine.

The autonomous classification ratio (ACR) is the fraction of standalone
decisions over a sliding window of m iterations. A state tracker folds the
ACR series into the operational states: steady, performance degradation,
recovering, recovered, then back to steady with an incremented cycle counter
when further disruptions arrive.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum


class SystemState(Enum):
    UNSTARTED = -1
    STEADY = 0
    PERFORMANCE_DEGRADATION = 1
    RECOVERING = 2
    RECOVERED = 3

    @property
    def label(self) -> str:
        return self.name.lower()


class ThresholdUnavailable(Exception):
    """No degradation has occurred yet, so no threshold has been fixed."""


class AcrWindow:
    """FIFO of m standalone flags; starts as m zeros."""

    def __init__(self, m: int):
        if m < 1:
            raise ValueError("window size must be >= 1")
        self.m = m
        self._queue = deque([0] * m, maxlen=m)

    def record(self, standalone: bool) -> float:
        """Slide the window by one decision and return the new ratio."""
        self._queue.append(1 if standalone else 0)
        return sum(self._queue) / self.m

    @property
    def flags(self) -> tuple[int, ...]:
        return tuple(self._queue)


@dataclass
class TracePoint:
    iteration: int
    acr: float
    state: SystemState
    cycle: int


class AcrTrace:
    """Append-only ACR series with the state attributed to each point."""

    def __init__(self):
        self.points: list[TracePoint] = []

    def append(self, iteration: int, acr: float, state: SystemState, cycle: int):
        if self.points and iteration != self.points[-1].iteration + 1:
            raise ValueError("trace iterations must increase by exactly 1")
        self.points.append(TracePoint(iteration, acr, state, cycle))

    def acrs(self) -> list[float]:
        return [p.acr for p in self.points]

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class StateTracker:
    """Evaluates the current operational state from the ACR series.

    One `observe` call per ACR point. Degradation fires only on an exact
    zero; the acceptance threshold is fixed once, at the first degradation,
    as the minimum ACR between the steady start t0 and the estimated event
    time te (the last point that dipped below the satisfactory level,
    inclusive). If no point ever dipped, the whole steady prefix is used.
    Recovery requires the ACR to hold at or above the threshold for a run
    as long as the measured steady state (te - t0).
    """

    satisfactory: float = 0.5
    current: SystemState = SystemState.UNSTARTED
    cycle: int = 0
    t0: int = 0
    te: int = 0
    ta: int = 0
    tr: int = 0
    recovered_flag: int = 0
    acr_threshold: float = 0.0
    _acrs: list[float] = field(default_factory=list)

    def observe(self, iteration: int, acr: float) -> SystemState:
        if iteration != len(self._acrs):
            raise ValueError(f"expected iteration {len(self._acrs)}, got {iteration}")
        self._acrs.append(acr)
        i = iteration

        if self.current is SystemState.UNSTARTED:
            if acr == 1.0:
                self.current = SystemState.STEADY
                self.t0 = i
        elif self.current is SystemState.STEADY:
            # The zero test must run before the satisfactory comparisons,
            # otherwise the sub-satisfactory branch shadows it.
            if acr == 0.0:
                self.current = SystemState.PERFORMANCE_DEGRADATION
                if self.acr_threshold == 0.0:
                    if self.te > self.t0:
                        segment = self._acrs[self.t0:self.te + 1]
                    else:
                        segment = self._acrs[self.t0:i]
                    self.acr_threshold = min(segment)
            elif acr >= self.satisfactory:
                self.te = 0
            else:
                self.te = i
        elif self.current is SystemState.PERFORMANCE_DEGRADATION:
            self.current = SystemState.RECOVERING
            self.ta = i
            # Candidate streak starts at the next point; without this a
            # recovery that never dips below the threshold could not be
            # promoted, because the reset branch would never have run.
            self.tr = 0
            self.recovered_flag = i + 1
        elif self.current is SystemState.RECOVERING:
            if acr < self.acr_threshold:
                self.tr = 0
                self.recovered_flag = i + 1
            else:
                self.tr = i
                if self.tr - self.recovered_flag == self.te - self.t0:
                    self.current = SystemState.RECOVERED
        elif self.current is SystemState.RECOVERED:
            self.current = SystemState.STEADY
            self.cycle += 1

        return self.current

    def current_threshold(self) -> float:
        if self.acr_threshold == 0.0:
            raise ThresholdUnavailable("no degradation observed yet")
        return self.acr_threshold


def evaluate_trace(acrs: list[float], satisfactory: float = 0.5) -> list[SystemState]:
    """Replay a whole ACR series and return the state at each point."""
    tracker = StateTracker(satisfactory=satisfactory)
    return [tracker.observe(i, v) for i, v in enumerate(acrs)]
