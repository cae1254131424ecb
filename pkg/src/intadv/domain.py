"""Discrete image domain: pixel images, bounded integer perturbations and
the distance metrics defined over them.

Images are flat arrays in row-major, channel-interleaved order: the value of
channel ``c`` at pixel ``(x, y)`` lives at index ``(y * width + x) * channels
+ c``.  All types are immutable after construction and every operation here
is a pure function, so everything in this module is safe to share across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ImageShape",
    "IntegerImage",
    "RealImage",
    "Perturbation",
    "SearchSpace",
    "apply_perturbation",
    "distance_integer",
    "distance_real",
    "upscale_perturbation",
    "round_half_away_from_zero",
]

PIXEL_MIN = 0
PIXEL_MAX = 255

_ORDERS = (0, 1, 2, math.inf)


def round_half_away_from_zero(x: np.ndarray) -> np.ndarray:
    """Round to the nearest integer, with exact halves moving away from zero."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ImageShape:
    """Dimensions of an image: width and height in pixels, 1 or 3 channels."""

    width: int
    height: int
    channels: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be positive, got {self.width}x{self.height}")
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")

    @property
    def coordinate_count(self) -> int:
        return self.width * self.height * self.channels


@dataclass(frozen=True, eq=False)
class IntegerImage:
    """A valid image: one integer in [0, 255] per coordinate."""

    shape: ImageShape
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if not np.issubdtype(vals.dtype, np.integer):
            raise ValueError(f"pixel values must be integers, got dtype {vals.dtype}")
        vals = vals.astype(np.int32).ravel()
        if vals.size != self.shape.coordinate_count:
            raise ValueError(
                f"expected {self.shape.coordinate_count} values for shape "
                f"{self.shape.width}x{self.shape.height}x{self.shape.channels}, got {vals.size}"
            )
        if vals.size and (vals.min() < PIXEL_MIN or vals.max() > PIXEL_MAX):
            raise ValueError("pixel values must lie in [0, 255]")
        object.__setattr__(self, "values", _freeze(vals))

    @classmethod
    def _wrap(cls, shape: ImageShape, values: np.ndarray) -> "IntegerImage":
        # Internal fast path: caller guarantees dtype int32, flat, in range.
        obj = object.__new__(cls)
        object.__setattr__(obj, "shape", shape)
        object.__setattr__(obj, "values", _freeze(values))
        return obj

    @classmethod
    def from_grid(cls, grid: np.ndarray) -> "IntegerImage":
        """Build from an (height, width) or (height, width, channels) array."""
        grid = np.asarray(grid)
        if grid.ndim == 2:
            grid = grid[:, :, None]
        if grid.ndim != 3:
            raise ValueError(f"expected a 2-D or 3-D array, got {grid.ndim}-D")
        h, w, ch = grid.shape
        return cls(ImageShape(w, h, ch), grid.ravel())

    def grid(self) -> np.ndarray:
        """(height, width, channels) read-only view of the pixel values."""
        return self.values.reshape(self.shape.height, self.shape.width, self.shape.channels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntegerImage):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class RealImage:
    """An image in some continuous range: one finite real per coordinate."""

    shape: ImageShape
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).ravel()
        if vals.size != self.shape.coordinate_count:
            raise ValueError(
                f"expected {self.shape.coordinate_count} values, got {vals.size}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("real image values must all be finite")
        object.__setattr__(self, "values", _freeze(vals))

    @classmethod
    def from_grid(cls, grid: np.ndarray) -> "RealImage":
        grid = np.asarray(grid, dtype=np.float64)
        if grid.ndim == 2:
            grid = grid[:, :, None]
        if grid.ndim != 3:
            raise ValueError(f"expected a 2-D or 3-D array, got {grid.ndim}-D")
        h, w, ch = grid.shape
        return cls(ImageShape(w, h, ch), grid.ravel())

    def grid(self) -> np.ndarray:
        return self.values.reshape(self.shape.height, self.shape.width, self.shape.channels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RealImage):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class Perturbation:
    """An integer offset field with per-coordinate values in [-budget, budget]."""

    shape: ImageShape
    budget: int
    values: np.ndarray

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError(f"budget must be a positive integer, got {self.budget}")
        vals = np.asarray(self.values)
        if not np.issubdtype(vals.dtype, np.integer):
            raise ValueError(f"perturbation values must be integers, got dtype {vals.dtype}")
        vals = vals.astype(np.int32).ravel()
        if vals.size != self.shape.coordinate_count:
            raise ValueError(
                f"expected {self.shape.coordinate_count} values, got {vals.size}"
            )
        if vals.size and np.abs(vals).max() > self.budget:
            raise ValueError(f"perturbation values must lie in [-{self.budget}, {self.budget}]")
        object.__setattr__(self, "values", _freeze(vals))

    @classmethod
    def _wrap(cls, shape: ImageShape, budget: int, values: np.ndarray) -> "Perturbation":
        # Internal fast path: caller guarantees dtype int32, flat, within budget.
        obj = object.__new__(cls)
        object.__setattr__(obj, "shape", shape)
        object.__setattr__(obj, "budget", budget)
        object.__setattr__(obj, "values", _freeze(values))
        return obj

    @classmethod
    def zeros(cls, shape: ImageShape, budget: int) -> "Perturbation":
        return cls(shape, budget, np.zeros(shape.coordinate_count, dtype=np.int32))

    def grid(self) -> np.ndarray:
        return self.values.reshape(self.shape.height, self.shape.width, self.shape.channels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Perturbation):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.budget == other.budget
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class SearchSpace:
    """Per-coordinate integer interval bounds for perturbations.

    A perturbation belongs to the space iff ``low[p] <= value[p] <= high[p]``
    at every coordinate ``p``; both bound arrays stay within the budget.
    """

    shape: ImageShape
    budget: int
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError(f"budget must be a positive integer, got {self.budget}")
        low = np.asarray(self.low, dtype=np.int32).ravel()
        high = np.asarray(self.high, dtype=np.int32).ravel()
        n = self.shape.coordinate_count
        if low.size != n or high.size != n:
            raise ValueError(f"bound arrays must each have {n} entries")
        if np.any(low > high):
            raise ValueError("every low bound must not exceed the matching high bound")
        if np.any(low < -self.budget) or np.any(high > self.budget):
            raise ValueError(f"bounds must lie within [-{self.budget}, {self.budget}]")
        object.__setattr__(self, "low", _freeze(low))
        object.__setattr__(self, "high", _freeze(high))

    @classmethod
    def full(cls, shape: ImageShape, budget: int) -> "SearchSpace":
        """The unrefined space covering [-budget, budget] at every coordinate."""
        n = shape.coordinate_count
        return cls(
            shape,
            budget,
            np.full(n, -budget, dtype=np.int32),
            np.full(n, budget, dtype=np.int32),
        )

    def contains(self, delta: Perturbation) -> bool:
        return (
            delta.shape == self.shape
            and bool(np.all(delta.values >= self.low))
            and bool(np.all(delta.values <= self.high))
        )


def apply_perturbation(d: IntegerImage, delta: Perturbation) -> IntegerImage:
    """Add a perturbation to an image, clamping each coordinate to [0, 255]."""
    if d.shape != delta.shape:
        raise ValueError(f"shape mismatch: image {d.shape} vs perturbation {delta.shape}")
    out = np.clip(d.values + delta.values, PIXEL_MIN, PIXEL_MAX).astype(np.int32)
    return IntegerImage._wrap(d.shape, out)


def _check_order(order):
    if order not in _ORDERS:
        raise ValueError(f"order must be one of 0, 1, 2 or inf, got {order!r}")


def distance_integer(d1: IntegerImage, d2: IntegerImage, order) -> int | float:
    """Distance between integer images.

    Order 0 counts differing coordinates, 1 sums absolute differences and inf
    takes the largest absolute difference; these are exact integers.  Order 2
    is the Euclidean distance as a float.
    """
    _check_order(order)
    if d1.shape != d2.shape:
        raise ValueError(f"shape mismatch: {d1.shape} vs {d2.shape}")
    diff = d1.values.astype(np.int64) - d2.values.astype(np.int64)
    if order == 0:
        return int(np.count_nonzero(diff))
    if order == 1:
        return int(np.abs(diff).sum())
    if order == 2:
        return float(math.sqrt(float((diff * diff).sum())))
    return int(np.abs(diff).max(initial=0))


def distance_real(v1: RealImage, v2: RealImage, order) -> float:
    """Distance between real images (same orders as the integer metric)."""
    _check_order(order)
    if v1.shape != v2.shape:
        raise ValueError(f"shape mismatch: {v1.shape} vs {v2.shape}")
    diff = v1.values - v2.values
    if order == 0:
        return float(np.count_nonzero(diff))
    if order == 1:
        return float(np.abs(diff).sum())
    if order == 2:
        return float(math.sqrt(float((diff * diff).sum())))
    return float(np.abs(diff).max(initial=0.0))


def _axis_positions(n_out: int, n_in: int) -> np.ndarray:
    # Align-corners mapping: output corner samples coincide with input corners.
    if n_out == 1 or n_in == 1:
        return np.zeros(n_out, dtype=np.float64)
    return np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)


def upscale_perturbation(delta_r: Perturbation, target: ImageShape) -> Perturbation:
    """Bilinearly enlarge a perturbation to ``target``, keeping it integral.

    Each channel is interpolated with the align-corners convention, then every
    value is rounded half away from zero and clamped to the budget, so the
    result never exceeds the source's max-offset bound.
    """
    src_shape = delta_r.shape
    if src_shape.channels != target.channels:
        raise ValueError(
            f"channel mismatch: {src_shape.channels} vs {target.channels}"
        )
    if target.width < src_shape.width or target.height < src_shape.height:
        raise ValueError("target dimensions must not be smaller than the source")
    if src_shape == target:
        return Perturbation._wrap(target, delta_r.budget, delta_r.values.copy())

    src = delta_r.grid().astype(np.float64)
    ys = _axis_positions(target.height, src_shape.height)
    xs = _axis_positions(target.width, src_shape.width)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, src_shape.height - 1)
    x1 = np.minimum(x0 + 1, src_shape.width - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]

    top = src[y0][:, x0] * (1.0 - wx) + src[y0][:, x1] * wx
    bottom = src[y1][:, x0] * (1.0 - wx) + src[y1][:, x1] * wx
    interp = top * (1.0 - wy) + bottom * wy

    out = round_half_away_from_zero(interp)
    out = np.clip(out, -delta_r.budget, delta_r.budget).astype(np.int32)
    return Perturbation._wrap(target, delta_r.budget, out.ravel())
