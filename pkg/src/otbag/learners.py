"""Online weak learners with a test-then-train interface.

Both learners are linear: ``score = w . x + b`` and the hard label is 1 iff
the score is strictly positive. A fresh learner therefore predicts 0.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .core import FeatureVector
from .errors import BadConfig, BadDimension, DimensionMismatch


class LearnerKind(enum.Enum):
    PERCEPTRON = "perceptron"
    LOGISTIC = "logistic"

    @classmethod
    def parse(cls, value) -> "LearnerKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise BadConfig(f"unknown learner kind {value!r}") from None


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


class LinearLearner:
    """State shared by the linear online learners."""

    kind: LearnerKind

    def __init__(self, dimension: int):
        if int(dimension) < 1:
            raise BadDimension(f"dimension must be >= 1, got {dimension}")
        self.dimension = int(dimension)
        self.weights = np.zeros(self.dimension)
        self.bias = 0.0

    def _check(self, x: FeatureVector) -> None:
        if x.dimension != self.dimension:
            raise DimensionMismatch(
                f"learner has dimension {self.dimension}, got vector of {x.dimension}"
            )

    def score(self, x: FeatureVector) -> float:
        self._check(x)
        return x.dot(self.weights) + self.bias

    def predict(self, x: FeatureVector) -> int:
        return 1 if self.score(x) > 0.0 else 0

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        """Labels for the rows of a dense ``(n, dimension)`` array."""
        if X.ndim != 2 or X.shape[1] != self.dimension:
            raise DimensionMismatch(f"expected (n, {self.dimension}) array, got {X.shape}")
        return (X @ self.weights + self.bias > 0.0).astype(np.int8)

    def hyperparams(self) -> dict:
        return {}

    def copy(self) -> "LinearLearner":
        twin = new_learner(self.kind, self.dimension, **self.hyperparams())
        twin.weights = self.weights.copy()
        twin.bias = self.bias
        return twin

    def __eq__(self, other):
        if not isinstance(other, LinearLearner):
            return NotImplemented
        return (
            self.kind is other.kind
            and self.hyperparams() == other.hyperparams()
            and self.bias == other.bias
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    def __repr__(self):
        return f"{type(self).__name__}(dimension={self.dimension}, bias={self.bias!r})"


class Perceptron(LinearLearner):
    """Classic mistake-driven perceptron with unit step size."""

    kind = LearnerKind.PERCEPTRON

    def update(self, x: FeatureVector, y: int) -> None:
        if self.predict(x) != y:
            sign = 2 * y - 1
            x.add_to(self.weights, sign)
            self.bias += sign


class OnlineLogistic(LinearLearner):
    """Logistic regression trained by one SGD step per update."""

    kind = LearnerKind.LOGISTIC

    def __init__(self, dimension: int, learning_rate: float = 0.1):
        super().__init__(dimension)
        if not learning_rate > 0 or not math.isfinite(learning_rate):
            raise BadConfig(f"learning_rate must be a positive finite number, got {learning_rate}")
        self.learning_rate = float(learning_rate)

    def hyperparams(self) -> dict:
        return {"learning_rate": self.learning_rate}

    def proba(self, x: FeatureVector) -> float:
        return sigmoid(self.score(x))

    def update(self, x: FeatureVector, y: int) -> None:
        step = self.learning_rate * (y - self.proba(x))
        x.add_to(self.weights, step)
        self.bias += step


def new_learner(kind, dimension: int, **hyperparams) -> LinearLearner:
    kind = LearnerKind.parse(kind)
    if kind is LearnerKind.PERCEPTRON:
        if hyperparams:
            raise BadConfig(f"perceptron takes no hyperparameters, got {sorted(hyperparams)}")
        return Perceptron(dimension)
    return OnlineLogistic(dimension, **hyperparams)
