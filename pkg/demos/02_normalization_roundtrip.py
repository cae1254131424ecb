"""Normalization schemes and the cost of leaving the integer grid.

Classifiers consume real-valued images produced by some affine normalization
of the integer pixels.  Inverting that map after an attack requires rounding,
and rounding is exactly where continuous-domain attacks lose successes.  This
script shows the five supported schemes, verifies that grid points survive
the round trip exactly, and measures the error for points off the grid.
"""

import numpy as np

from intadv import (
    ImageShape,
    IntegerImage,
    NormalizationScheme,
    RealImage,
    denormalize,
    discretization_error,
    normalize,
)

one = ImageShape(1, 1, 1)
sweep = IntegerImage(ImageShape(16, 16, 1), np.arange(256))

schemes = {
    "unit (i/255)": NormalizationScheme("unit"),
    "centered_half (i/255 - 0.5)": NormalizationScheme("centered_half"),
    "centered_one (2i/255 - 1)": NormalizationScheme("centered_one"),
    "mean_subtract": NormalizationScheme("mean_subtract", mean=(33.32,)),
    "mean_std": NormalizationScheme("mean_std", mean=(33.32,), std=(78.57,)),
}

print("range of each scheme over pixel values 0..255:")
for name, scheme in schemes.items():
    v = normalize(sweep, scheme)
    print(f"  {name:32s} [{v.values.min():9.4f}, {v.values.max():9.4f}]")

print("\nround trip over all 256 values, every scheme and rounding mode:")
for name, scheme in schemes.items():
    for rounding in ("nearest", "floor", "ceil"):
        s = NormalizationScheme(scheme.variant, scheme.mean, scheme.std, rounding)
        assert denormalize(normalize(sweep, s), s) == sweep
print("  exact everywhere\n")

unit = NormalizationScheme("unit")
midpoint = RealImage(one, np.array([0.5]))  # between pixels 127 and 128
print("a continuous value exactly between two grid points:")
print("  0.5 denormalizes to pixel", denormalize(midpoint, unit).values[0])
print("  discretization error:", f"{discretization_error(midpoint, unit):.6f}",
      "(= 0.5/255, half a grid step)")

off_grid = RealImage(one, np.array([0.2001]))
for rounding in ("nearest", "floor", "ceil"):
    s = NormalizationScheme("unit", rounding=rounding)
    print(f"  0.2001 with {rounding:7s} rounding -> pixel", denormalize(off_grid, s).values[0])

print("\ngrid points have zero error by construction:",
      discretization_error(normalize(sweep, unit), unit))
