"""A small convolutional classifier behind the black-box oracle interface.

The built-in inference engine covers convolution, max pooling, dense layers,
ReLU and softmax, which is enough for compact digit-classifier targets.  The
whole network round-trips through a plain weight-file format, and a counting
wrapper tracks how many queries an attacker spends.
"""

import numpy as np

from intadv import (
    Conv2D,
    Dense,
    Flatten,
    ImageShape,
    IntegerImage,
    MaxPool2D,
    NetworkDefinition,
    NetworkOracle,
    NormalizationScheme,
    QueryCounter,
    ReLU,
    Softmax,
    load_network,
    save_network,
    top_j,
)

rng = np.random.default_rng(42)
shape = ImageShape(12, 12, 1)

# 12x12 -> conv 3x3 (valid) -> 10x10x4 -> maxpool 2x2 -> 5x5x4 -> dense -> 10
network = NetworkDefinition(
    input_shape=shape,
    scheme=NormalizationScheme("unit"),
    layers=(
        Conv2D(3, 3, 1, 4,
               rng.normal(size=(4, 1, 3, 3)).astype(np.float32),
               rng.normal(size=4).astype(np.float32) * 0.1),
        ReLU(),
        MaxPool2D(2, 2, 2),
        Flatten(),
        Dense(100, 10,
              rng.normal(size=(10, 100)).astype(np.float32) * 0.1,
              np.zeros(10, dtype=np.float32)),
        Softmax(),
    ),
)
print("network classes:", network.class_count)

save_network(network, "/tmp/demo_net.w")
print("saved to /tmp/demo_net.w; header:")
header = open("/tmp/demo_net.w", "rb").read().split(b"weights\n")[0].decode()
for line in header.strip().split("\n"):
    print("   ", line)

reloaded = load_network("/tmp/demo_net.w")
oracle = QueryCounter(NetworkOracle(reloaded))

image = IntegerImage(shape, rng.integers(0, 256, shape.coordinate_count))
probs = oracle.predict(image)
label, confidence = top_j(probs, 1)
runner_up, p2 = top_j(probs, 2)
print(f"\nclean prediction: class {label} at {confidence:.3f}"
      f" (runner-up {runner_up} at {p2:.3f})")
print("probabilities sum to", probs.probs.sum())
print("queries spent so far:", oracle.count)

for _ in range(4):
    oracle.predict(image)
print("after four more queries:", oracle.count)
