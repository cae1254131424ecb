import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intadv import (
    ImageShape,
    IntegerImage,
    NormalizationScheme,
    ProbabilityVector,
    QueryCounter,
    RealImage,
    normalize,
    synthetic_sum_oracle,
    top_j,
)
from helpers import FixedOracle, random_image

SHAPE = ImageShape(2, 2, 1)


class TestProbabilityVector:
    def test_needs_two_classes(self):
        with pytest.raises(ValueError):
            ProbabilityVector(np.array([1.0]))

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            ProbabilityVector(np.array([1.2, -0.2]))

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            ProbabilityVector(np.array([0.5, 0.6]))

    def test_tolerates_tiny_sum_error(self):
        ProbabilityVector(np.array([0.5, 0.5 + 5e-7]))


class TestTopJ:
    def test_first_and_second(self):
        p = ProbabilityVector(np.array([0.1, 0.7, 0.2]))
        assert top_j(p, 1) == (1, pytest.approx(0.7))
        assert top_j(p, 2) == (2, pytest.approx(0.2))
        assert top_j(p, 3) == (0, pytest.approx(0.1))

    def test_tie_goes_to_lower_class(self):
        p = ProbabilityVector(np.array([0.5, 0.5]))
        assert top_j(p, 1) == (0, 0.5)
        assert top_j(p, 2) == (1, 0.5)

    def test_j_out_of_range(self):
        p = ProbabilityVector(np.array([0.5, 0.5]))
        for j in (0, 3):
            with pytest.raises(ValueError):
                top_j(p, j)

    @given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8))
    @settings(max_examples=100)
    def test_enumerates_every_class_once(self, raw):
        probs = np.array(raw) / np.sum(raw)
        p = ProbabilityVector(probs)
        classes = [top_j(p, j)[0] for j in range(1, len(raw) + 1)]
        assert sorted(classes) == list(range(len(raw)))
        ranked = [top_j(p, j)[1] for j in range(1, len(raw) + 1)]
        assert all(a >= b for a, b in zip(ranked, ranked[1:]))


class TestQueryCounter:
    def test_starts_at_zero(self):
        qc = QueryCounter(FixedOracle(SHAPE, [0.5, 0.5]))
        assert qc.count == 0

    def test_counts_each_predict(self):
        qc = QueryCounter(FixedOracle(SHAPE, [0.5, 0.5]))
        img = IntegerImage(SHAPE, np.zeros(4, dtype=np.int32))
        for _ in range(3):
            qc.predict(img)
        assert qc.count == 3

    def test_concurrent_increments(self):
        qc = QueryCounter(FixedOracle(SHAPE, [0.5, 0.5]))
        img = IntegerImage(SHAPE, np.zeros(4, dtype=np.int32))

        def hammer():
            for _ in range(200):
                qc.predict(img)

        threads = [threading.Thread(target=hammer) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert qc.count == 1600

    def test_delegates_metadata(self):
        qc = QueryCounter(FixedOracle(SHAPE, [0.2, 0.8]))
        assert qc.class_count() == 2
        assert qc.input_shape() == SHAPE


class TestSumOracle:
    def test_balanced_at_threshold(self):
        oracle = synthetic_sum_oracle(SHAPE, threshold=100, sharpness=4.0)
        img = IntegerImage(SHAPE, np.array([25, 25, 25, 25]))
        assert np.allclose(oracle.predict(img).probs, [0.5, 0.5])

    def test_saturates_far_above(self):
        oracle = synthetic_sum_oracle(SHAPE, threshold=0, sharpness=50.0)
        img = IntegerImage(SHAPE, np.full(4, 255, dtype=np.int32))
        assert oracle.predict(img).probs[0] > 0.999999

    def test_monotone_in_pixel_sum(self):
        oracle = synthetic_sum_oracle(SHAPE, threshold=400, sharpness=2.0)
        rng = np.random.default_rng(5)
        imgs = [random_image(SHAPE, rng) for _ in range(20)]
        pairs = sorted((int(i.values.sum()), float(oracle.predict(i).probs[0])) for i in imgs)
        probs = [p for _, p in pairs]
        assert all(a <= b + 1e-12 for a, b in zip(probs, probs[1:]))

    def test_deterministic(self):
        oracle = synthetic_sum_oracle(SHAPE, threshold=300, sharpness=8.0)
        img = IntegerImage(SHAPE, np.array([1, 99, 200, 7]))
        a = oracle.predict(img).probs
        b = oracle.predict(img).probs
        assert np.array_equal(a, b)

    def test_real_entry_matches_integer_on_grid(self):
        oracle = synthetic_sum_oracle(SHAPE, threshold=300, sharpness=8.0)
        img = IntegerImage(SHAPE, np.array([10, 20, 30, 40]))
        v = normalize(img, oracle.scheme)
        assert np.allclose(oracle.predict_real(v).probs, oracle.predict(img).probs)

    def test_rejects_nonpositive_sharpness(self):
        with pytest.raises(ValueError):
            synthetic_sum_oracle(SHAPE, threshold=0, sharpness=0.0)

    def test_shape_checked(self):
        oracle = synthetic_sum_oracle(SHAPE, threshold=0, sharpness=1.0)
        with pytest.raises(ValueError):
            oracle.predict(IntegerImage(ImageShape(1, 1, 1), np.array([0])))
