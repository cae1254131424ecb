"""Black-box classifier oracles and probability-vector utilities.

An oracle answers integer images with a full probability vector.  Oracles
backed by an in-process network additionally expose ``predict_real`` so gap
studies can classify continuous images directly, bypassing normalization.
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .domain import ImageShape, IntegerImage, RealImage
from .normalization import NormalizationScheme, denormalize_real

__all__ = [
    "ProbabilityVector",
    "ClassifierOracle",
    "QueryCounter",
    "top_j",
    "softmax",
    "synthetic_sum_oracle",
    "SumOracle",
]

_SUM_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """Nonnegative per-class probabilities summing to one (within 1e-6)."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64).ravel()
        if probs.size < 2:
            raise ValueError(f"need at least 2 classes, got {probs.size}")
        if probs.size and probs.min() < 0:
            raise ValueError("probabilities must be nonnegative")
        if abs(float(probs.sum()) - 1.0) > _SUM_TOLERANCE:
            raise ValueError(f"probabilities sum to {probs.sum():.9f}, not 1")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return self.probs.size

    @property
    def class_count(self) -> int:
        return self.probs.size


def top_j(p: ProbabilityVector, j: int) -> tuple[int, float]:
    """Class index and probability of the j-th largest entry (1-based).

    Ties go to the lower class index, so the ranking is a total order and
    repeated calls enumerate every class exactly once.
    """
    if not 1 <= j <= p.class_count:
        raise ValueError(f"j must be in [1, {p.class_count}], got {j}")
    order = np.argsort(-p.probs, kind="stable")
    idx = int(order[j - 1])
    return idx, float(p.probs[idx])


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax (max logit subtracted first)."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


class ClassifierOracle(ABC):
    """Deterministic black-box classifier: identical inputs, identical outputs."""

    @abstractmethod
    def predict(self, d: IntegerImage) -> ProbabilityVector:
        """Classify an integer image."""

    @abstractmethod
    def class_count(self) -> int:
        """Number of classes in the output vector."""

    @abstractmethod
    def input_shape(self) -> ImageShape:
        """Shape the oracle expects."""

    def predict_real(self, v: RealImage) -> ProbabilityVector:
        """Classify a continuous image directly, where the oracle supports it."""
        raise NotImplementedError(f"{type(self).__name__} has no real-domain entry point")

    def _check_shape(self, shape: ImageShape) -> None:
        expected = self.input_shape()
        if shape != expected:
            raise ValueError(f"oracle expects shape {expected}, got {shape}")


class QueryCounter(ClassifierOracle):
    """Wraps an oracle and counts ``predict`` calls, one per call, atomically.

    Real-domain calls are passed through uncounted; the counter tracks the
    black-box query budget, which is spent on integer images only.
    """

    def __init__(self, wrapped: ClassifierOracle):
        self._wrapped = wrapped
        self._count = 0
        self._lock = threading.Lock()

    @property
    def count(self) -> int:
        return self._count

    def predict(self, d: IntegerImage) -> ProbabilityVector:
        with self._lock:
            self._count += 1
        return self._wrapped.predict(d)

    def predict_real(self, v: RealImage) -> ProbabilityVector:
        return self._wrapped.predict_real(v)

    def class_count(self) -> int:
        return self._wrapped.class_count()

    def input_shape(self) -> ImageShape:
        return self._wrapped.input_shape()


class SumOracle(ClassifierOracle):
    """Two-class oracle driven by the total pixel mass.

    Class 0's logit grows with ``sharpness * (sum(d) - threshold) / |P|`` and
    class 1's is its negation, so the decision boundary sits exactly at
    ``sum(d) == threshold``.  Monotone, deterministic and cheap; meant for
    tests and demos.
    """

    def __init__(self, shape: ImageShape, threshold: int, sharpness: float,
                 scheme: NormalizationScheme | None = None):
        if sharpness <= 0:
            raise ValueError(f"sharpness must be positive, got {sharpness}")
        self._shape = shape
        self._threshold = int(threshold)
        self._sharpness = float(sharpness)
        self._scheme = scheme if scheme is not None else NormalizationScheme("unit")

    @property
    def threshold(self) -> int:
        return self._threshold

    @property
    def scheme(self) -> NormalizationScheme:
        return self._scheme

    def _probs_from_pixel_sum(self, total: float) -> ProbabilityVector:
        logit = self._sharpness * (total - self._threshold) / self._shape.coordinate_count
        return ProbabilityVector(softmax(np.array([logit, -logit])))

    def predict(self, d: IntegerImage) -> ProbabilityVector:
        self._check_shape(d.shape)
        return self._probs_from_pixel_sum(float(d.values.sum()))

    def predict_real(self, v: RealImage) -> ProbabilityVector:
        self._check_shape(v.shape)
        pixels = denormalize_real(v, self._scheme)
        return self._probs_from_pixel_sum(float(pixels.sum()))

    def class_count(self) -> int:
        return 2

    def input_shape(self) -> ImageShape:
        return self._shape


def synthetic_sum_oracle(shape: ImageShape, threshold: int, sharpness: float,
                         scheme: NormalizationScheme | None = None) -> SumOracle:
    """Build a :class:`SumOracle`; see that class for the decision rule."""
    return SumOracle(shape, threshold, sharpness, scheme)
