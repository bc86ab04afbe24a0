"""Raster buffer types and lossless image I/O (binary PPM/PGM and PNG).

All buffers wrap a row-major numpy array and are read-only after
construction. Sample (x, y, c) of an image with ``n`` channels sits at flat
index ``(y * width + x) * n + c`` of :meth:`tobytes`.
"""
from __future__ import annotations

import io
import os
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from .errors import CorruptData, InvalidParameter, UnsupportedFormat

PathLike = Union[str, "os.PathLike[str]"]

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def round_half_up(x):
    """Round reals to the nearest integer, ties toward +inf."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def div_round_half_up(num, den):
    """Exact half-up rounding of the rational ``num / den`` for integer arrays.

    ``den`` may be negative; it must not be zero.
    """
    num = np.asarray(num, dtype=np.int64)
    den = np.asarray(den, dtype=np.int64)
    sign = np.where(den < 0, -1, 1)
    num, den = num * sign, den * sign
    return (2 * num + den) // (2 * den)


def _as_u8(data, name: str) -> np.ndarray:
    arr = np.asarray(data)
    if arr.dtype != np.uint8:
        if arr.size and (not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0 or arr.max() > 255):
            raise InvalidParameter(f"{name} samples must be integers in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


class _Raster:
    channels = 1
    data: np.ndarray

    def __init__(self, data):
        arr = np.array(self._coerce(data), copy=True)
        if arr.ndim != (3 if self.channels > 1 else 2):
            raise InvalidParameter(f"{type(self).__name__} expects a {'HxWx3' if self.channels > 1 else 'HxW'} array, got shape {arr.shape}")
        if self.channels > 1 and arr.shape[2] != self.channels:
            raise InvalidParameter(f"{type(self).__name__} expects {self.channels} channels, got {arr.shape[2]}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidParameter("image dimensions must be >= 1")
        arr.setflags(write=False)
        self.data = arr

    def _coerce(self, data):
        return _as_u8(data, type(self).__name__)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        """(height, width)."""
        return self.data.shape[:2]

    def tobytes(self) -> bytes:
        return self.data.tobytes()

    @classmethod
    def sample_index(cls, x: int, y: int, channel: int, width: int) -> int:
        return (y * width + x) * cls.channels + channel

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((type(self).__name__, self.data.shape, self.data.tobytes()))

    def __repr__(self):
        return f"{type(self).__name__}(width={self.width}, height={self.height})"


class RgbImage(_Raster):
    """Interleaved 8-bit R, G, B samples."""

    channels = 3

    @classmethod
    def from_bytes(cls, payload: bytes, width: int, height: int) -> "RgbImage":
        return cls(np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3))


class HsvImage(_Raster):
    """Interleaved H (0-179), S (0-255), V (0-255) samples."""

    channels = 3

    def __init__(self, data):
        super().__init__(data)
        if self.data[..., 0].max() > 179:
            raise InvalidParameter("hue samples must lie in [0, 179]")

    @property
    def h(self) -> np.ndarray:
        return self.data[..., 0]

    @property
    def s(self) -> np.ndarray:
        return self.data[..., 1]

    @property
    def v(self) -> np.ndarray:
        return self.data[..., 2]


class GrayImage(_Raster):
    channels = 1


class BinaryMask(_Raster):
    """Per-pixel booleans; row-major like every other raster."""

    channels = 1

    def _coerce(self, data):
        arr = np.asarray(data)
        if arr.dtype != np.bool_:
            if arr.size and not np.isin(arr, (0, 1)).all():
                raise InvalidParameter("BinaryMask expects boolean (or 0/1) data")
            arr = arr.astype(bool)
        return arr

    @property
    def bits(self) -> np.ndarray:
        return self.data

    def count(self) -> int:
        return int(self.data.sum())

    def __invert__(self) -> "BinaryMask":
        return BinaryMask(~self.data)

    def __and__(self, other: "BinaryMask") -> "BinaryMask":
        return BinaryMask(self.data & other.data)

    def __or__(self, other: "BinaryMask") -> "BinaryMask":
        return BinaryMask(self.data | other.data)

    @classmethod
    def zeros(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    def to_gray(self) -> GrayImage:
        return GrayImage(np.where(self.data, 255, 0).astype(np.uint8))


Raster = Union[RgbImage, GrayImage, HsvImage, BinaryMask]


def mask_from_gray(g: GrayImage, threshold: int) -> BinaryMask:
    """bit = sample >= threshold."""
    if not 0 <= threshold <= 255:
        raise InvalidParameter(f"threshold must lie in [0, 255], got {threshold}")
    return BinaryMask(g.data >= threshold)


# --- PNM ---------------------------------------------------------------------

def _parse_pnm(raw: bytes) -> tuple[bytes, int, int, bytes]:
    """Split a binary PNM file into (magic, width, height, payload)."""
    magic = raw[:2]
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and raw[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise CorruptData("malformed PNM header")
        fields.append(int(raw[start:pos]))
    # exactly one whitespace byte separates the header from the payload
    if pos >= len(raw) or not raw[pos:pos + 1].isspace():
        raise CorruptData("malformed PNM header")
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedFormat(f"only maxval 255 is supported, got {maxval}")
    if width < 1 or height < 1:
        raise CorruptData(f"invalid dimensions {width}x{height}")
    return magic, width, height, raw[pos + 1:]


def _read_raw(path: PathLike) -> bytes:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such image file: {p}")
    return p.read_bytes()


def _decode(raw: bytes) -> np.ndarray:
    """Decode to an HxW or HxWx3 uint8 array."""
    if raw[:2] in (b"P5", b"P6"):
        magic, width, height, payload = _parse_pnm(raw)
        channels = 3 if magic == b"P6" else 1
        expected = width * height * channels
        if len(payload) < expected:
            raise CorruptData(f"payload holds {len(payload)} bytes, header promises {expected}")
        arr = np.frombuffer(payload[:expected], dtype=np.uint8)
        return arr.reshape((height, width, 3) if channels == 3 else (height, width))
    if raw[:8] == PNG_MAGIC:
        try:
            with Image.open(io.BytesIO(raw)) as im:
                im.load()
                if im.mode not in ("RGB", "L"):
                    raise UnsupportedFormat(f"unsupported PNG mode {im.mode!r}")
                return np.asarray(im, dtype=np.uint8)
        except UnsupportedFormat:
            raise
        except (OSError, SyntaxError, ValueError) as exc:
            raise CorruptData(f"unreadable PNG: {exc}") from exc
    raise UnsupportedFormat("expected a binary PPM/PGM (P6/P5) or PNG file")


def load_image(path: PathLike) -> RgbImage:
    """Load an RGB image; grayscale files are replicated across channels."""
    arr = _decode(_read_raw(path))
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return RgbImage(arr)


def load_gray(path: PathLike) -> GrayImage:
    arr = _decode(_read_raw(path))
    if arr.ndim == 3:
        raise UnsupportedFormat(f"{path} is a color image, expected grayscale")
    return GrayImage(arr)


def load_mask(path: PathLike, threshold: int = 128) -> BinaryMask:
    return mask_from_gray(load_gray(path), threshold)


def save_image(img: Raster, path: PathLike) -> None:
    """Write ``img`` losslessly; format chosen by extension (.png, else PNM).

    RGB (and HSV, as raw channel bytes) go to P6, gray to P5, masks to P5
    with values 0/255.
    """
    p = Path(path)
    if isinstance(img, BinaryMask):
        img = img.to_gray()
    arr = img.data
    try:
        if p.suffix.lower() == ".png":
            Image.fromarray(arr).save(p, format="PNG")
            return
        magic = b"P6" if arr.ndim == 3 else b"P5"
        header = b"%s\n%d %d\n255\n" % (magic, arr.shape[1], arr.shape[0])
        p.write_bytes(header + arr.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write {p}: {exc}") from exc
