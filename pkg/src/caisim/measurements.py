"""Run-level metrics over the disruptive portion of a trace: recovery speed,
performance steadiness, green efficiency, and autonomy.

All four metrics are computed over the disruptive state of a cycle, which
runs from the first degradation point through the end of the recovered
segment. A cycle that never recovers closes its disruptive state at the fix
event, or at the end of the run if the event was never fixed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .resilience import SystemState


class EmptyState(ValueError):
    """A metric was asked for over an empty state."""


@dataclass(frozen=True)
class Segment:
    """Half-open iteration range [start, end) spent in one state."""

    cycle: int
    state: SystemState
    start: int
    end: int

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class MetricsReport:
    policy: str
    seed: int
    cycle: int
    duration_ratio: float
    fluctuation_ratio: float
    co2_mean: float
    human_dependency: float

    METRIC_FIELDS = ("duration_ratio", "fluctuation_ratio", "co2_mean",
                     "human_dependency")


def duration_ratio(recovering_len: int, disruptive_len: int) -> float:
    """Share of the disruptive state spent selecting recovery actions."""
    if disruptive_len <= 0:
        raise EmptyState("disruptive state is empty")
    return recovering_len / disruptive_len


def fluctuation_ratio(acrs: Sequence[float], threshold: float) -> float:
    """Points below the threshold per point at or above it.

    The denominator is floored at one so runs that never reach the threshold
    still yield a finite ratio.
    """
    if len(acrs) == 0:
        raise EmptyState("no ACR values in the disruptive state")
    below = sum(1 for v in acrs if v < threshold)
    at_or_above = len(acrs) - below
    return below / max(at_or_above, 1)


def co2_mean(co2_values: Sequence[float]) -> float:
    if len(co2_values) == 0:
        raise EmptyState("no CO2 values in the disruptive state")
    return sum(co2_values) / len(co2_values)


def human_dependency(interaction_counts: Sequence[int]) -> float:
    if len(interaction_counts) == 0:
        raise EmptyState("no iterations in the disruptive state")
    return sum(interaction_counts) / len(interaction_counts)


def extract_segments(states: Sequence[SystemState],
                     cycles: Sequence[int]) -> list[Segment]:
    """Contiguous (cycle, state) runs over a completed trace."""
    if len(states) != len(cycles):
        raise ValueError("states and cycles must align")
    segments: list[Segment] = []
    start = 0
    for i in range(1, len(states) + 1):
        if i == len(states) or states[i] != states[start] or cycles[i] != cycles[start]:
            segments.append(Segment(cycle=cycles[start], state=states[start],
                                    start=start, end=i))
            start = i
    return segments


def disruptive_range(segments: Sequence[Segment], cycle: int,
                     fix_events: Sequence[int], run_end: int) -> tuple[int, int] | None:
    """[start, end) of the cycle's disruptive state, or None without degradation."""
    degradations = [s for s in segments
                    if s.cycle == cycle and s.state is SystemState.PERFORMANCE_DEGRADATION]
    if not degradations:
        return None
    start = degradations[0].start
    recovered = [s for s in segments
                 if s.cycle == cycle and s.state is SystemState.RECOVERED]
    if recovered:
        return start, recovered[-1].end
    later_fixes = [f for f in fix_events if f >= start]
    if later_fixes:
        return start, later_fixes[0]
    return start, run_end


def compute_cycle_metrics(policy: str, seed: int,
                          segments: Sequence[Segment],
                          acrs: Sequence[float],
                          co2_values: Sequence[float],
                          interaction_counts: Sequence[int],
                          threshold: float,
                          fix_events: Sequence[int]) -> list[MetricsReport]:
    """One report per cycle that exhibited a degradation."""
    run_end = len(acrs)
    reports = []
    for cycle in sorted({s.cycle for s in segments}):
        window = disruptive_range(segments, cycle, fix_events, run_end)
        if window is None:
            continue
        start, end = window
        # A fix can close the window mid-recovery; count only the part inside.
        recovering_len = sum(max(0, min(s.end, end) - s.start) for s in segments
                             if s.cycle == cycle and s.state is SystemState.RECOVERING)
        reports.append(MetricsReport(
            policy=policy, seed=seed, cycle=cycle,
            duration_ratio=duration_ratio(recovering_len, end - start),
            fluctuation_ratio=fluctuation_ratio(acrs[start:end], threshold),
            co2_mean=co2_mean(co2_values[start:end]),
            human_dependency=human_dependency(interaction_counts[start:end]),
        ))
    return reports


def group_reports(reports: Iterable[MetricsReport]) -> dict[str, list[MetricsReport]]:
    grouped: dict[str, list[MetricsReport]] = {}
    for r in reports:
        grouped.setdefault(r.policy, []).append(r)
    return grouped


def compare_policies(reports_by_policy: Mapping[str, Sequence[MetricsReport]]) -> list[dict]:
    """Mean of each metric per policy; lower is better on every column."""
    rows = []
    for policy in sorted(reports_by_policy):
        reports = reports_by_policy[policy]
        if not reports:
            warnings.warn(f"policy {policy!r} has no reports; excluded")
            continue
        row = {"policy": policy, "runs": len(reports)}
        for name in MetricsReport.METRIC_FIELDS:
            row[name] = sum(getattr(r, name) for r in reports) / len(reports)
        rows.append(row)
    return rows
