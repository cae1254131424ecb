"""Bit-exact file I/O: IDX image sets, binary PGM/PPM, raw float tensors and
line-delimited run reports.

Lossless carriers matter here: the whole point of working in the integer
domain is that no byte changes between what the search evaluated and what is
written to disk, so only uncompressed formats are supported.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .domain import ImageShape, IntegerImage, RealImage
from .errors import FormatError

__all__ = [
    "IDX_IMAGE_MAGIC",
    "load_idx_images",
    "read_image",
    "write_image",
    "read_real_tensor",
    "write_real_tensor",
    "write_report",
    "report_lines",
]

IDX_IMAGE_MAGIC = 0x00000803
_MAX_IDX_DIM = 1 << 31


def load_idx_images(path) -> list[IntegerImage]:
    """Read a big-endian IDX file of unsigned-byte images (one channel)."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 16:
        raise FormatError(f"IDX header truncated: need 16 bytes, file has {len(blob)}")
    magic, count, rows, cols = struct.unpack(">IIII", blob[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(
            f"bad IDX magic 0x{magic:08x} at byte 0: expected 0x{IDX_IMAGE_MAGIC:08x} "
            "(unsigned-byte 3-D image file)"
        )
    if rows < 1 or cols < 1:
        raise FormatError(f"IDX dimensions must be positive, got {rows}x{cols}")
    if rows >= _MAX_IDX_DIM or cols >= _MAX_IDX_DIM or count >= _MAX_IDX_DIM:
        raise FormatError(f"IDX dimensions overflow: {count}x{rows}x{cols}")
    need = count * rows * cols
    have = len(blob) - 16
    if have != need:
        raise FormatError(
            f"IDX payload at byte 16: expected {need} pixel bytes for "
            f"{count} images of {rows}x{cols}, found {have}"
        )
    pixels = np.frombuffer(blob, dtype=np.uint8, offset=16).reshape(count, rows, cols)
    shape = ImageShape(width=cols, height=rows, channels=1)
    return [
        IntegerImage._wrap(shape, img.astype(np.int32).ravel())
        for img in pixels
    ]


def _next_token(blob: bytes, pos: int) -> tuple[bytes, int]:
    # Netpbm tokens are separated by whitespace; '#' starts a comment to EOL.
    while pos < len(blob):
        c = blob[pos:pos + 1]
        if c == b"#":
            nl = blob.find(b"\n", pos)
            if nl < 0:
                raise FormatError("unterminated comment in image header")
            pos = nl + 1
        elif c.isspace():
            pos += 1
        else:
            break
    if pos >= len(blob):
        raise FormatError("image header ended early")
    start = pos
    while pos < len(blob) and not blob[pos:pos + 1].isspace():
        pos += 1
    return blob[start:pos], pos


def read_image(path) -> IntegerImage:
    """Read a binary PGM (P5, one channel) or PPM (P6, three channels) image."""
    with open(path, "rb") as f:
        blob = f.read()
    magic, pos = _next_token(blob, 0)
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise FormatError(f"unsupported image magic {magic!r}: expected P5 or P6")
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _next_token(blob, pos)
        try:
            fields.append(int(token))
        except ValueError:
            raise FormatError(f"non-numeric {name} {token!r} in image header") from None
    width, height, maxval = fields
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}")
    if width < 1 or height < 1:
        raise FormatError(f"image dimensions must be positive, got {width}x{height}")
    pos += 1  # single whitespace byte after maxval
    need = width * height * channels
    raster = blob[pos:]
    if len(raster) != need:
        raise FormatError(f"raster has {len(raster)} bytes, expected {need}")
    values = np.frombuffer(raster, dtype=np.uint8).astype(np.int32)
    return IntegerImage._wrap(ImageShape(width, height, channels), values)


def write_image(image: IntegerImage, path) -> None:
    """Write binary PGM for one channel, PPM for three; lossless round trip."""
    magic = "P5" if image.shape.channels == 1 else "P6"
    header = f"{magic}\n{image.shape.width} {image.shape.height}\n255\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(image.values.astype(np.uint8).tobytes())


def read_real_tensor(path) -> RealImage:
    """Read a raw tensor: one ASCII line ``W H C`` then little-endian float32."""
    with open(path, "rb") as f:
        blob = f.read()
    nl = blob.find(b"\n")
    if nl < 0:
        raise FormatError("tensor file has no header line")
    try:
        parts = blob[:nl].decode("ascii").split()
        width, height, channels = (int(p) for p in parts)
    except (UnicodeDecodeError, ValueError):
        raise FormatError(f"tensor header must be 'W H C', got {blob[:nl]!r}") from None
    shape = ImageShape(width, height, channels)
    payload = blob[nl + 1:]
    need = 4 * shape.coordinate_count
    if len(payload) != need:
        raise FormatError(f"tensor payload has {len(payload)} bytes, expected {need}")
    values = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return RealImage(shape, values)


def write_real_tensor(image: RealImage, path) -> None:
    """Write the raw tensor format read by :func:`read_real_tensor`."""
    header = f"{image.shape.width} {image.shape.height} {image.shape.channels}\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(image.values.astype("<f4").tobytes())


def report_lines(report, clock: str = "real") -> list[str]:
    """Serialize a batch report: one JSON object per image, then the aggregate.

    ``clock='none'`` zeroes the wall-time fields (``elapsed_ms``, ``atc_s``)
    so that identical configurations produce byte-identical reports.
    """
    if clock not in ("real", "none"):
        raise ValueError(f"clock must be 'real' or 'none', got {clock!r}")
    timed = clock == "real"
    lines = []
    for i, out in enumerate(report.outcomes):
        row = {
            "image": i,
            "success": out.success,
            "queries": out.queries_used,
            "iterations": out.iterations_used,
            "degree": out.final_degree,
            "mse": report.mses[i],
            "elapsed_ms": out.elapsed * 1e3 if timed else 0.0,
        }
        if out.error is not None:
            row["error"] = out.error
        lines.append(json.dumps(row, sort_keys=True))
    aggregate = {
        "n": report.n,
        "sr": report.sr,
        "tsr": report.tsr,
        "gap": report.gap,
        "avg_queries": report.avg_queries,
        "atc_s": (report.atc if timed else 0.0) if report.atc is not None else None,
        "avg_mse": report.avg_mse,
    }
    lines.append(json.dumps(aggregate, sort_keys=True))
    return lines


def write_report(report, path, clock: str = "real") -> None:
    with open(path, "w", encoding="ascii") as f:
        for line in report_lines(report, clock):
            f.write(line + "\n")
