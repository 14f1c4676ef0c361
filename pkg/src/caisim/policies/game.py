"""Two-agent policy: a 2x2 game between a resilience player (rows) and a
greenness player (columns), solved by pure or mixed Nash equilibrium."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..evaluator import ActionEstimate, ActionKind
from .wsm import l2_normalize_column

_EPS = 1e-9

ACTIONS = (ActionKind.AUTONOMOUS, ActionKind.HUMAN)


@dataclass(frozen=True)
class PayoffMatrix:
    """Per-cell (resilience, greenness) payoffs indexed [row][col].

    Rows are the resilience player's action, columns the greenness player's.
    Diagonal cells carry the matching magnifier beta = 2, off-diagonal 1.
    """

    resilience: np.ndarray  # (2, 2) row player's payoff per cell
    greenness: np.ndarray   # (2, 2) column player's payoff per cell

    def cell(self, row: int, col: int) -> tuple[float, float]:
        return float(self.resilience[row, col]), float(self.greenness[row, col])

    def cell_sum(self, row: int, col: int) -> float:
        return float(self.resilience[row, col] + self.greenness[row, col])


@dataclass(frozen=True)
class PureEquilibrium:
    cell: tuple[int, int]


@dataclass(frozen=True)
class MixedEquilibrium:
    """p is the row (resilience) player's probability of the first action,
    q the column (greenness) player's."""

    p: float
    q: float


class NoInteriorSolution(Exception):
    """The indifference equations have no probability solution in [0, 1]."""


def build_payoff_matrix(p_hat: float,
                        estimates: dict[ActionKind, ActionEstimate]) -> PayoffMatrix:
    """Payoffs from the smoothed action costs.

    Resilience: beta * p_hat * N(1/t_hat) of the row action. Greenness:
    beta * (1 - p_hat) * N(1/h) * N(1/c_hat) of the column action. Inverted
    denominators are floored at 1e-9.
    """
    est = [estimates[k] for k in ACTIONS]
    n_inv_t = l2_normalize_column([1.0 / max(e.t_hat, _EPS) for e in est])
    n_inv_h = l2_normalize_column([1.0 / max(float(e.h_remaining), _EPS) for e in est])
    n_inv_c = l2_normalize_column([1.0 / max(e.c_hat, _EPS) for e in est])
    res = np.zeros((2, 2))
    gre = np.zeros((2, 2))
    for r in range(2):
        for c in range(2):
            beta = 2.0 if r == c else 1.0
            res[r, c] = beta * p_hat * n_inv_t[r]
            gre[r, c] = beta * (1.0 - p_hat) * n_inv_h[c] * n_inv_c[c]
    return PayoffMatrix(resilience=res, greenness=gre)


def find_psne(matrix: PayoffMatrix) -> list[tuple[int, int]]:
    """All cells where neither player gains by unilateral deviation.

    Ties count: a best response only needs to be weakly best.
    """
    res, gre = matrix.resilience, matrix.greenness
    cells = []
    for r in range(2):
        for c in range(2):
            row_best = res[r, c] >= res[1 - r, c]
            col_best = gre[r, c] >= gre[r, 1 - c]
            if row_best and col_best:
                cells.append((r, c))
    return cells


def solve_msne(matrix: PayoffMatrix) -> MixedEquilibrium:
    """Mixing probabilities that leave the opponent indifferent.

    The row player's p comes from equating the column player's expected
    payoffs, and the column player's q from equating the row player's.
    """
    res, gre = matrix.resilience, matrix.greenness
    denom_p = gre[0, 0] - gre[1, 0] - gre[0, 1] + gre[1, 1]
    denom_q = res[0, 0] - res[0, 1] - res[1, 0] + res[1, 1]
    if denom_p == 0.0 or denom_q == 0.0:
        raise NoInteriorSolution("indifference equations are degenerate")
    p = (gre[1, 1] - gre[1, 0]) / denom_p
    q = (res[1, 1] - res[0, 1]) / denom_q
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise NoInteriorSolution(f"solution outside [0, 1]: p={p}, q={q}")
    return MixedEquilibrium(p=p, q=q)


def game_select(matrix: PayoffMatrix, p_hat: float | None = None,
                k: float | None = None) -> ActionKind:
    """Pick the action the equilibrium structure recommends.

    Diagonal pure equilibria win first, ranked by combined payoff. Otherwise
    the mixed equilibrium's joint cell probabilities decide, ties broken by
    combined payoff and then toward the autonomous action. If no interior
    mixed solution exists, fall back to the internal confidence rule.
    """
    psne = find_psne(matrix)
    diagonal = [cell for cell in psne if cell[0] == cell[1]]
    if diagonal:
        best = max(diagonal, key=lambda cell: (matrix.cell_sum(*cell), cell[0] == 0))
        return ACTIONS[best[0]]

    try:
        eq = solve_msne(matrix)
    except NoInteriorSolution:
        if p_hat is None or k is None:
            raise
        return ActionKind.AUTONOMOUS if p_hat >= k else ActionKind.HUMAN

    row_probs = (eq.p, 1.0 - eq.p)
    col_probs = (eq.q, 1.0 - eq.q)
    best_cell = (0, 0)
    best_key = (-1.0, -np.inf)
    for r in range(2):
        for c in range(2):
            key = (row_probs[r] * col_probs[c], matrix.cell_sum(r, c))
            if key[0] > best_key[0] or (key[0] == best_key[0] and key[1] > best_key[1]):
                best_key = key
                best_cell = (r, c)
    return ACTIONS[best_cell[0]]
