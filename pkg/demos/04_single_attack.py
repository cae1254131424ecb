"""Anatomy of one attack run.

The optimizer keeps a small population of scored perturbations.  Each
iteration it splits them into the best few and the rest, shrinks the
per-coordinate search interval toward a best sample and away from the
majority side of the rest, draws replacements inside the shrunken interval,
and keeps the best survivors.  The dissatisfaction degree it minimizes is
zero exactly when the attack predicate holds, so the trace below tells the
whole story of the run.
"""

import numpy as np

from intadv import (
    AttackConfig,
    ImageShape,
    IntegerImage,
    distance_integer,
    run_attack,
    synthetic_sum_oracle,
    top_j,
)

shape = ImageShape(8, 8, 1)
rng = np.random.default_rng(7)
image = IntegerImage(shape, rng.integers(60, 190, shape.coordinate_count))

# the synthetic target flips its answer when the total pixel mass crosses a
# threshold placed 25 units above this image
oracle = synthetic_sum_oracle(shape, threshold=int(image.values.sum()) + 25, sharpness=6.0)
label = top_j(oracle.predict(image), 1)[0]
print("clean class:", label)

config = AttackConfig(
    epsilon=2,               # no pixel moves by more than 2
    sample_size=3,           # new candidates per iteration
    ranking_threshold=2,     # best candidates kept as anchors
    coordinate_threshold=6,  # coordinates re-drawn per candidate
    iteration_threshold=500,
    seed=2024,
)
outcome = run_attack(oracle, image, config, original_label=label)

print("success:", outcome.success)
print("iterations:", outcome.iterations_used, " queries:", outcome.queries_used,
      f" elapsed: {outcome.elapsed * 1e3:.1f} ms")
print("query accounting: (s+k) + s*iterations =",
      (config.sample_size + config.ranking_threshold)
      + config.sample_size * outcome.iterations_used)

trace = outcome.degree_trace
shown = list(np.round(trace[:8], 4))
print(f"\nbest-degree trace ({len(trace)} entries, never increases):")
print("  ", shown, "..." if len(trace) > 8 else "")

if outcome.success:
    adv = outcome.adversarial
    print("\nadversarial class:", top_j(oracle.predict(adv), 1)[0])
    print("largest pixel change:", distance_integer(image, adv, float("inf")),
          "<= eps =", config.epsilon)
    print("changed pixels:", distance_integer(image, adv, 0), "of", shape.coordinate_count)
    print("no rounding step follows: the image the oracle just misclassified")
    print("IS the integer image we hand back, so the success cannot degrade.")
