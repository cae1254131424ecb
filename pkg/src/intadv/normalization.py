"""Mapping between integer pixels and the real ranges classifiers consume.

Five affine schemes are supported, all strictly increasing in the pixel
value.  Denormalization inverts the scheme, applies a configurable rounding
mode and clamps to [0, 255]; for every integer image the round trip
``denormalize(normalize(d)) == d`` holds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import IntegerImage, RealImage, round_half_away_from_zero
from .errors import ConfigurationError

__all__ = [
    "NormalizationScheme",
    "VARIANTS",
    "ROUNDINGS",
    "normalize",
    "denormalize",
    "denormalize_real",
    "discretization_error",
]

VARIANTS = ("unit", "centered_half", "centered_one", "mean_subtract", "mean_std")
ROUNDINGS = ("nearest", "floor", "ceil")

# Values this close to an integer are treated as that integer before the
# rounding mode applies; keeps floor/ceil round trips exact despite the
# femto-scale error of inverting the affine map in floating point.
_GRID_SNAP = 1e-6


@dataclass(frozen=True)
class NormalizationScheme:
    """One normalization variant plus its per-channel parameters.

    ``unit`` maps i to i/255, ``centered_half`` to i/255 - 0.5, ``centered_one``
    to 2i/255 - 1.  ``mean_subtract`` and ``mean_std`` need per-channel means
    (and positive stds) supplied as configuration; they are never derived from
    data here.
    """

    variant: str
    mean: tuple[float, ...] | None = None
    std: tuple[float, ...] | None = None
    rounding: str = "nearest"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(
                f"unknown variant {self.variant!r}; expected one of {VARIANTS}"
            )
        if self.rounding not in ROUNDINGS:
            raise ConfigurationError(
                f"unknown rounding {self.rounding!r}; expected one of {ROUNDINGS}"
            )
        if self.mean is not None:
            object.__setattr__(self, "mean", tuple(float(m) for m in self.mean))
        if self.std is not None:
            std = tuple(float(s) for s in self.std)
            if any(s <= 0 for s in std):
                raise ConfigurationError("std values must be strictly positive")
            object.__setattr__(self, "std", std)
        if self.variant in ("mean_subtract", "mean_std") and self.mean is None:
            raise ConfigurationError(f"variant {self.variant!r} requires per-channel means")
        if self.variant == "mean_std" and self.std is None:
            raise ConfigurationError("variant 'mean_std' requires per-channel stds")
        if self.mean is not None and self.std is not None and len(self.mean) != len(self.std):
            raise ConfigurationError("mean and std must have the same length")

    def _params(self, channels: int) -> tuple[np.ndarray | None, np.ndarray | None]:
        mean = std = None
        if self.variant in ("mean_subtract", "mean_std"):
            if len(self.mean) != channels:
                raise ConfigurationError(
                    f"scheme has {len(self.mean)} channel means but the image has {channels} channels"
                )
            mean = np.asarray(self.mean, dtype=np.float64)
        if self.variant == "mean_std":
            if len(self.std) != channels:
                raise ConfigurationError(
                    f"scheme has {len(self.std)} channel stds but the image has {channels} channels"
                )
            std = np.asarray(self.std, dtype=np.float64)
        return mean, std


def _forward(values: np.ndarray, scheme: NormalizationScheme, channels: int) -> np.ndarray:
    mean, std = scheme._params(channels)
    x = values.reshape(-1, channels).astype(np.float64)
    if scheme.variant == "unit":
        out = x / 255.0
    elif scheme.variant == "centered_half":
        out = x / 255.0 - 0.5
    elif scheme.variant == "centered_one":
        out = 2.0 * x / 255.0 - 1.0
    elif scheme.variant == "mean_subtract":
        out = x - mean
    else:
        out = (x - mean) / std
    return out.ravel()


def _inverse(values: np.ndarray, scheme: NormalizationScheme, channels: int) -> np.ndarray:
    mean, std = scheme._params(channels)
    r = values.reshape(-1, channels).astype(np.float64)
    if scheme.variant == "unit":
        out = r * 255.0
    elif scheme.variant == "centered_half":
        out = (r + 0.5) * 255.0
    elif scheme.variant == "centered_one":
        out = (r + 1.0) * 255.0 / 2.0
    elif scheme.variant == "mean_subtract":
        out = r + mean
    else:
        out = r * std + mean
    return out.ravel()


def normalize(d: IntegerImage, scheme: NormalizationScheme) -> RealImage:
    """Apply the scheme formula coordinatewise."""
    out = _forward(d.values, scheme, d.shape.channels)
    return RealImage(d.shape, out)


def denormalize(v: RealImage, scheme: NormalizationScheme) -> IntegerImage:
    """Invert the scheme, round per the configured mode and clamp to [0, 255]."""
    x = _inverse(v.values, scheme, v.shape.channels)
    nearest_int = np.rint(x)
    on_grid = np.abs(x - nearest_int) <= _GRID_SNAP
    x = np.where(on_grid, nearest_int, x)
    if scheme.rounding == "nearest":
        x = round_half_away_from_zero(x)
    elif scheme.rounding == "floor":
        x = np.floor(x)
    else:
        x = np.ceil(x)
    out = np.clip(x, 0, 255).astype(np.int32)
    return IntegerImage._wrap(v.shape, out)


def denormalize_real(v: RealImage, scheme: NormalizationScheme) -> np.ndarray:
    """Continuous inverse of the scheme: pixel-scale reals, no rounding or clamp."""
    return _inverse(v.values, scheme, v.shape.channels)


def discretization_error(v: RealImage, scheme: NormalizationScheme) -> float:
    """Largest coordinatewise error of the denormalize-then-renormalize round trip."""
    back = normalize(denormalize(v, scheme), scheme)
    if v.shape.coordinate_count == 0:
        return 0.0
    return float(np.abs(back.values - v.values).max())
