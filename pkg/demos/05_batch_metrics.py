"""Batch runs and the success-rate metrics.

A batch report tracks two counts: images whose attack succeeded in the
continuous domain and images whose attack survives as an integer image.
Their ratios are ``sr`` and ``tsr``, and ``gap`` is the relative loss between
them.  Attacks run natively on integers, so both counts coincide and the gap
is zero by construction; the script also sweeps the offset budget to show the
difficulty trend.
"""

import numpy as np

from intadv import (
    AttackConfig,
    ImageShape,
    IntegerImage,
    run_batch,
    synthetic_sum_oracle,
)

shape = ImageShape(8, 8, 1)
rng = np.random.default_rng(11)

# forty images, each a random distance below the oracle's decision boundary
threshold = 64 * 125
images = []
for _ in range(40):
    vals = rng.integers(100, 150, shape.coordinate_count)
    vals[0] += threshold - int(rng.integers(20, 120)) - int(vals.sum())
    images.append(IntegerImage(shape, np.clip(vals, 0, 255)))
oracle = synthetic_sum_oracle(shape, threshold, sharpness=6.0)

print(f"{'eps':>4} {'sr':>6} {'tsr':>6} {'gap':>5} {'avg queries':>12} {'avg mse':>10}")
for eps in (1, 2, 4):
    config = AttackConfig(epsilon=eps, sample_size=3, ranking_threshold=2,
                          coordinate_threshold=6, iteration_threshold=250, seed=5)
    report = run_batch(oracle, images, config)
    q = f"{report.avg_queries:.0f}" if report.avg_queries is not None else "-"
    m = f"{report.avg_mse:.2e}" if report.avg_mse is not None else "-"
    print(f"{eps:>4} {report.sr:>6.2f} {report.tsr:>6.2f} {report.gap:>5.2f} {q:>12} {m:>10}")

print("\nsr equals tsr on every row: a native integer-domain attack cannot")
print("lose successes to rounding, so its gap is identically zero.")
print("larger budgets succeed more often and need fewer queries.")
