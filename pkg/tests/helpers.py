"""Shared test oracles and builders."""

import numpy as np

from intadv import (
    ClassifierOracle,
    ImageShape,
    IntegerImage,
    ProbabilityVector,
    distance_integer,
)


class FixedOracle(ClassifierOracle):
    """Answers every query with the same probability vector."""

    def __init__(self, shape: ImageShape, probs):
        self._shape = shape
        self._probs = np.asarray(probs, dtype=np.float64)

    def predict(self, d):
        self._check_shape(d.shape)
        return ProbabilityVector(self._probs)

    def class_count(self):
        return self._probs.size

    def input_shape(self):
        return self._shape


class RecordingOracle(ClassifierOracle):
    """Delegates to another oracle, recording every queried image.

    Tracks the largest max-offset distance between any queried image and the
    reference original, which is how the budget invariant is checked.
    """

    def __init__(self, wrapped: ClassifierOracle, reference: IntegerImage):
        self._wrapped = wrapped
        self._reference = reference
        self.max_linf = 0
        self.queried = []

    def predict(self, d):
        self.queried.append(d)
        self.max_linf = max(self.max_linf, distance_integer(self._reference, d, float("inf")))
        return self._wrapped.predict(d)

    def class_count(self):
        return self._wrapped.class_count()

    def input_shape(self):
        return self._wrapped.input_shape()


def random_image(shape: ImageShape, rng: np.random.Generator,
                 low: int = 0, high: int = 255) -> IntegerImage:
    return IntegerImage(shape, rng.integers(low, high + 1, shape.coordinate_count))
