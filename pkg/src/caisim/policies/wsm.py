"""One-agent policy: weighted-sum scoring of the two feasible actions, plus
pairwise-comparison weight derivation with a consistency check."""

from __future__ import annotations

import numpy as np

from ..evaluator import ActionEstimate, ActionKind

_EPS = 1e-9

# Random consistency index for matrices of size 1..10.
_RANDOM_INDEX = (0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49)


class DegenerateColumn(ValueError):
    """A metric column was all zero and cannot be normalized."""


def l2_normalize_column(values) -> np.ndarray:
    """Divide a metric column by its Euclidean norm."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise DegenerateColumn("empty column")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DegenerateColumn("all-zero column")
    return v / norm


def wsm_select(p_hat: float,
               estimates: dict[ActionKind, ActionEstimate],
               weights: tuple[float, float] = (0.5, 0.5)) -> ActionKind:
    """Pick the action with the highest combined resilience/greenness score.

    Per action: w_r * [p_hat * N(1/t_hat)] + w_g * [(1 - p_hat) * (N(h) + N(1/c_hat))],
    each column L2-normalized across the current action set. Ties go to the
    autonomous action.
    """
    w_r, w_g = _check_weights(weights)
    kinds = list(ActionKind)
    est = [estimates[k] for k in kinds]
    inv_t = l2_normalize_column([1.0 / max(e.t_hat, _EPS) for e in est])
    h_col = l2_normalize_column([float(e.h_remaining) for e in est])
    inv_c = l2_normalize_column([1.0 / max(e.c_hat, _EPS) for e in est])
    scores = w_r * (p_hat * inv_t) + w_g * ((1.0 - p_hat) * (h_col + inv_c))
    return kinds[int(np.argmax(scores))]


def _check_weights(weights) -> tuple[float, float]:
    w_r, w_g = float(weights[0]), float(weights[1])
    if w_r < 0 or w_g < 0 or abs(w_r + w_g - 1.0) > 1e-9:
        raise ValueError("objective weights must be nonnegative and sum to 1")
    return w_r, w_g


def ahp_weights(comparison) -> tuple[np.ndarray, float]:
    """Derive objective weights from a positive reciprocal comparison matrix.

    Columns are normalized by their sums and weights are the row means. The
    consistency ratio compares the principal-eigenvalue estimate against the
    random index for the matrix size; judgments with a ratio above 0.1 are
    conventionally considered inconsistent.
    """
    a = np.asarray(comparison, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("comparison matrix must be square")
    n = a.shape[0]
    if n > len(_RANDOM_INDEX):
        raise ValueError(f"matrices larger than {len(_RANDOM_INDEX)}x"
                         f"{len(_RANDOM_INDEX)} are unsupported")
    if n < 2:
        raise ValueError("need at least two objectives")
    if np.any(a < 1.0 / 9 - 1e-9) or np.any(a > 9 + 1e-9):
        raise ValueError("entries must come from the 1-9 comparison scale")
    if not np.allclose(np.diag(a), 1.0):
        raise ValueError("diagonal entries must be 1")
    if not np.allclose(a * a.T, 1.0, atol=1e-9):
        raise ValueError("matrix must be reciprocal: a[i][j] == 1/a[j][i]")

    weights = (a / a.sum(axis=0)).mean(axis=1)
    lam_max = float(np.mean((a @ weights) / weights))
    ci = (lam_max - n) / (n - 1)
    ri = _RANDOM_INDEX[n - 1]
    cr = 0.0 if ri == 0.0 else ci / ri
    return weights, cr
