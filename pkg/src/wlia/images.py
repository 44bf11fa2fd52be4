"""Grayscale image container and lossless PGM/PNG codecs.

Supported formats: binary PGM (P5, 8-bit or 16-bit big-endian) and 8/16-bit
single-channel PNG.  Pixel values map to floats without rescaling, and the
PGM writer reproduces a loaded file byte for byte.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ImageFormatError

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_GRAY_PNG_MODES = {"L": 8, "I": 16, "I;16": 16, "I;16B": 16, "I;16L": 16}


@dataclass(frozen=True, eq=False)
class GrayImage:
    """2-D grid of non-negative intensities with its storage provenance.

    ``pixels`` is the row-major flat vector; ``source_depth`` is 8 or 16
    and ``max_value`` the maxval the file declared (used when writing).
    """

    width: int
    height: int
    pixels: np.ndarray
    source_depth: int = 8
    max_value: int = None

    def __post_init__(self):
        w, h = int(self.width), int(self.height)
        if w < 1 or h < 1:
            raise ValueError("image dimensions must be positive")
        pix = np.ascontiguousarray(self.pixels, dtype=np.float64).ravel().copy()
        if pix.size != w * h:
            raise ValueError("pixel count does not match width * height")
        if not np.all(np.isfinite(pix)) or np.any(pix < 0.0):
            raise ValueError("pixels must be finite and non-negative")
        depth = int(self.source_depth)
        if depth not in (8, 16):
            raise ValueError("source_depth must be 8 or 16")
        maxval = (255 if depth == 8 else 65535) if self.max_value is None else int(self.max_value)
        if not 1 <= maxval <= 65535:
            raise ValueError("max_value must be in [1, 65535]")
        pix.setflags(write=False)
        object.__setattr__(self, "width", w)
        object.__setattr__(self, "height", h)
        object.__setattr__(self, "pixels", pix)
        object.__setattr__(self, "source_depth", depth)
        object.__setattr__(self, "max_value", maxval)

    @classmethod
    def from_array(cls, array, source_depth=8, max_value=None):
        arr = np.asarray(array, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls(
            width=arr.shape[1],
            height=arr.shape[0],
            pixels=arr.ravel(),
            source_depth=source_depth,
            max_value=max_value,
        )

    def as_2d(self):
        return self.pixels.reshape(self.height, self.width)


class _PgmReader:
    """Tokenizer for the PGM header, tracking byte offsets for errors."""

    def __init__(self, data):
        self.data = data
        self.pos = 0

    def _skip_separators(self):
        data = self.data
        while self.pos < len(data):
            ch = data[self.pos : self.pos + 1]
            if ch in b" \t\r\n":
                self.pos += 1
            elif ch == b"#":
                nl = data.find(b"\n", self.pos)
                if nl < 0:
                    raise ImageFormatError("unterminated comment", offset=self.pos)
                self.pos = nl + 1
            else:
                return

    def read_int(self, what):
        self._skip_separators()
        start = self.pos
        data = self.data
        while self.pos < len(data) and data[self.pos : self.pos + 1].isdigit():
            self.pos += 1
        if self.pos == start:
            raise ImageFormatError(f"expected {what}", offset=start)
        return int(data[start : self.pos])


def _decode_pgm(data):
    if data[:2] == b"P6":
        raise ImageFormatError("color PGM/PPM (P6) is not supported", offset=0)
    if data[:2] != b"P5":
        raise ImageFormatError("not a binary PGM (missing P5 magic)", offset=0)
    reader = _PgmReader(data)
    reader.pos = 2
    width = reader.read_int("width")
    height = reader.read_int("height")
    maxval = reader.read_int("maxval")
    if width < 1 or height < 1:
        raise ImageFormatError("non-positive image dimensions", offset=2)
    if not 1 <= maxval <= 65535:
        raise ImageFormatError(f"maxval {maxval} out of range", offset=reader.pos)
    # exactly one whitespace byte separates the header from the raster
    if reader.pos >= len(data) or data[reader.pos : reader.pos + 1] not in b" \t\r\n":
        raise ImageFormatError("missing raster separator", offset=reader.pos)
    raster_start = reader.pos + 1
    two_byte = maxval > 255
    expected = width * height * (2 if two_byte else 1)
    raster = data[raster_start : raster_start + expected]
    if len(raster) != expected:
        raise ImageFormatError(
            f"truncated raster: expected {expected} bytes", offset=raster_start + len(raster)
        )
    dtype = ">u2" if two_byte else np.uint8
    values = np.frombuffer(raster, dtype=dtype).astype(np.float64)
    return GrayImage(
        width=width,
        height=height,
        pixels=values,
        source_depth=16 if two_byte else 8,
        max_value=maxval,
    )


def _decode_png(data):
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise ImageFormatError(f"corrupt PNG: {exc}") from None
    if img.mode not in _GRAY_PNG_MODES:
        raise ImageFormatError(f"unsupported PNG mode {img.mode!r} (need 8/16-bit grayscale)")
    depth = _GRAY_PNG_MODES[img.mode]
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ImageFormatError("PNG did not decode to a single channel")
    if arr.min() < 0 or arr.max() > 65535:
        raise ImageFormatError("PNG sample values out of 16-bit range")
    return GrayImage(
        width=arr.shape[1],
        height=arr.shape[0],
        pixels=arr.ravel(),
        source_depth=depth,
        max_value=255 if depth == 8 else 65535,
    )


def load_image(path):
    """Decode a PGM (P5) or grayscale PNG file into a GrayImage."""
    data = Path(path).read_bytes()
    if data[: len(_PNG_MAGIC)] == _PNG_MAGIC:
        return _decode_png(data)
    if data[:1] == b"P":
        return _decode_pgm(data)
    raise ImageFormatError("unrecognized image format", offset=0)


def _quantized(image):
    levels = np.rint(image.pixels).astype(np.int64)
    return np.clip(levels, 0, image.max_value)


def save_image(image, path):
    """Write a GrayImage as PGM or PNG (by suffix), at its source depth.

    Fractional intensities are rounded to the nearest representable level.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    levels = _quantized(image)
    if suffix in (".pgm", ".pnm"):
        header = f"P5\n{image.width} {image.height}\n{image.max_value}\n".encode("ascii")
        if image.max_value > 255:
            raster = levels.astype(">u2").tobytes()
        else:
            raster = levels.astype(np.uint8).tobytes()
        path.write_bytes(header + raster)
    elif suffix == ".png":
        grid = levels.reshape(image.height, image.width)
        if image.source_depth == 8:
            pil = Image.fromarray(grid.astype(np.uint8), mode="L")
        else:
            pil = Image.fromarray(grid.astype(np.uint16))
        pil.save(path, format="PNG")
    else:
        raise ValueError(f"unsupported output suffix {suffix!r} (use .pgm or .png)")
