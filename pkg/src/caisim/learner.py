"""Online multiclass linear classifier and the autonomy confidence threshold.

The model is multinomial logistic regression trained one labeled instance at
a time with plain SGD and an L2 penalty on the weights. Softmax outputs are
used directly as the class probability estimates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .simulator import ObjectClass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ProbabilityEstimate:
    probs: np.ndarray
    p_hat: float
    predicted_class: int


def confidence_threshold(n: int) -> float:
    """Minimum confidence for an autonomous action with n classes.

    The reciprocal of the class count plus a discrimination margin of half a
    unit in the decimal place just below 1/n's leading digit scale.
    """
    if not isinstance(n, (int, np.integer)) or n <= 1:
        raise ValueError(f"class count must be an integer > 1, got {n!r}")
    return (1.0 / n) + 0.5 * 10.0 ** (-(math.floor(math.log10(n)) + 1))


class OnlineClassifier:
    """Softmax regression updated by single-instance SGD steps.

    Updates happen only when a human provides the true label; autonomous
    actions never touch the parameters.
    """

    def __init__(self, n_classes: int = 3, n_features: int = 24,
                 learning_rate: float = 0.5, l2_penalty: float = 1e-4):
        if n_classes < 2:
            raise ValueError("need at least two classes")
        if learning_rate < 0:
            raise ValueError("learning rate must be nonnegative")
        if l2_penalty < 0:
            raise ValueError("l2 penalty must be nonnegative")
        self.n_classes = n_classes
        self.n_features = n_features
        self.learning_rate = learning_rate
        self.l2_penalty = l2_penalty
        self.weights = np.zeros((n_classes, n_features))
        self.bias = np.zeros(n_classes)
        self.update_count = 0

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_features,):
            raise DimensionMismatch(
                f"expected feature vector of length {self.n_features}, "
                f"got shape {x.shape}")
        return x

    def predict_proba(self, x: np.ndarray) -> ProbabilityEstimate:
        x = self._check(x)
        logits = self.weights @ x + self.bias
        logits -= logits.max()
        exp = np.exp(logits)
        probs = exp / exp.sum()
        predicted = int(np.argmax(probs))
        return ProbabilityEstimate(probs=probs, p_hat=float(probs[predicted]),
                                   predicted_class=predicted)

    def update(self, x: np.ndarray, label: int | ObjectClass) -> None:
        """One SGD step on cross-entropy with L2 penalty on the weights."""
        x = self._check(x)
        label = label.value if isinstance(label, ObjectClass) else int(label)
        if not 0 <= label < self.n_classes:
            raise ValueError(f"label {label} outside [0, {self.n_classes})")
        probs = self.predict_proba(x).probs
        err = probs.copy()
        err[label] -= 1.0
        self.weights -= self.learning_rate * (np.outer(err, x)
                                              + self.l2_penalty * self.weights)
        self.bias -= self.learning_rate * err
        self.update_count += 1

    def loss(self, x: np.ndarray, label: int) -> float:
        """Penalized cross-entropy of one instance; the target of each step."""
        probs = self.predict_proba(x).probs
        penalty = 0.5 * self.l2_penalty * float(np.sum(self.weights ** 2))
        return -math.log(max(float(probs[label]), 1e-300)) + penalty

    def gradients(self, x: np.ndarray, label: int) -> tuple[np.ndarray, np.ndarray]:
        """Analytic (weight, bias) gradients of `loss` at the current parameters."""
        x = self._check(x)
        probs = self.predict_proba(x).probs
        err = probs.copy()
        err[label] -= 1.0
        return np.outer(err, x) + self.l2_penalty * self.weights, err

    def snapshot_csv(self, path: str | Path) -> None:
        """Debug dump: one row per class, bias first then the weight row."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for c in range(self.n_classes):
                writer.writerow([repr(float(self.bias[c]))]
                                + [repr(float(v)) for v in self.weights[c]])

    @classmethod
    def from_snapshot_csv(cls, path: str | Path, **kwargs) -> "OnlineClassifier":
        rows = [r for r in csv.reader(open(path))]
        model = cls(n_classes=len(rows), n_features=len(rows[0]) - 1, **kwargs)
        for c, row in enumerate(rows):
            model.bias[c] = float(row[0])
            model.weights[c] = [float(v) for v in row[1:]]
        return model
