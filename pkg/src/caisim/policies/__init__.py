"""Recovery decision policies: internal confidence rule, weighted-sum scoring,
a two-player matrix game, and tabular Q-learning."""

from __future__ import annotations

from ..evaluator import ActionKind
from .wsm import ahp_weights, l2_normalize_column, wsm_select
from .game import (PayoffMatrix, PureEquilibrium, MixedEquilibrium,
                   NoInteriorSolution, build_payoff_matrix, find_psne,
                   solve_msne, game_select)
from .rl import QTable, RecoveryAgent, q_update, rl_reward, rl_state, round_half_up

POLICY_NAMES = ("internal", "one-agent", "two-agent", "rl-agent")


def internal_select(p_hat: float, k: float) -> ActionKind:
    """Autonomous exactly when the confidence reaches the threshold."""
    return ActionKind.AUTONOMOUS if p_hat >= k else ActionKind.HUMAN


__all__ = [
    "ActionKind", "POLICY_NAMES", "internal_select",
    "l2_normalize_column", "wsm_select", "ahp_weights",
    "PayoffMatrix", "PureEquilibrium", "MixedEquilibrium", "NoInteriorSolution",
    "build_payoff_matrix", "find_psne", "solve_msne", "game_select",
    "QTable", "RecoveryAgent", "q_update", "rl_reward", "rl_state",
    "round_half_up",
]
