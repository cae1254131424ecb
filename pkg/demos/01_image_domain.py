"""Working in the integer image domain.

Images here are arrays of integers in [0, 255], perturbations are bounded
integer offset fields, and adding them clamps at the pixel range, so every
candidate the attack ever looks at is a valid image.  This script walks
through the operator, the distance metrics on both domains, and the bilinear
enlargement used for reduced-grid searches.
"""

import math

import numpy as np

from intadv import (
    ImageShape,
    IntegerImage,
    Perturbation,
    RealImage,
    apply_perturbation,
    distance_integer,
    distance_real,
    upscale_perturbation,
)

shape = ImageShape(width=4, height=2, channels=1)
image = IntegerImage(shape, np.array([100, 250, 3, 0, 128, 128, 128, 128]))
offsets = Perturbation(shape, budget=10, values=np.array([10, 10, -10, -10, 0, 5, -5, 10]))

print("pixels:  ", list(image.values))
print("offsets: ", list(offsets.values))

perturbed = apply_perturbation(image, offsets)
print("perturbed:", list(perturbed.values))
print("note the clamping: 250+10 -> 255 and 3-10 -> 0\n")

for order, name in [(0, "changed coordinates"), (1, "total change"),
                    (2, "euclidean"), (math.inf, "largest change")]:
    print(f"  integer distance order {order!s:>3} ({name}): "
          f"{distance_integer(image, perturbed, order)}")

print("\nthe max-offset distance never exceeds the budget:",
      distance_integer(image, perturbed, math.inf), "<=", offsets.budget)

# the same metrics exist for continuous images
v1 = RealImage(shape, image.values / 255.0)
v2 = RealImage(shape, perturbed.values / 255.0)
print("euclidean distance after scaling to [0,1]:", round(distance_real(v1, v2, 2), 4))

# a worst-case max-offset bound of 10 on a 299x299x3 image maps to a
# euclidean distance of about 20 on the unit scale
big = ImageShape(299, 299, 3)
worst = (10 / 255) * math.sqrt(big.coordinate_count)
print(f"worst-case eps=10 on {big.width}x{big.height}x{big.channels}: L2 = {worst:.2f}\n")

# reduced-grid searches enlarge a small offset field bilinearly; rounding
# half away from zero and clamping keeps the enlarged field inside the budget
small = Perturbation(ImageShape(2, 2, 1), budget=4, values=np.array([0, 4, 0, 4]))
large = upscale_perturbation(small, ImageShape(4, 4, 1))
print("2x2 offsets [[0,4],[0,4]] enlarged to 4x4 (align-corners):")
print(large.grid()[:, :, 0])
print("max |offset| after enlargement:", np.abs(large.values).max(), "<=", large.budget)
