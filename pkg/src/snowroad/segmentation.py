"""Snow classification in HSV and binary morphology with rectangular SEs.

Pixels outside the frame count as background (False) for both erosion and
dilation. The one exception is the erosion inside :func:`closing`, which
ignores out-of-frame pixels: paired with the False-padded dilation this
keeps the closing extensive, so road touching the frame edge survives.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .imagecore import BinaryMask, HsvImage


@dataclass(frozen=True)
class SnowThresholds:
    s_max: int = 30
    v_min: int = 150

    def __post_init__(self):
        for name in ("s_max", "v_min"):
            if not 0 <= getattr(self, name) <= 255:
                raise InvalidParameter(f"{name} must lie in [0, 255]")


@dataclass(frozen=True)
class StructuringElement:
    """Rectangle of odd width x height centred on its middle pixel."""

    width: int = 5
    height: int = 5

    def __post_init__(self):
        for name in ("width", "height"):
            val = getattr(self, name)
            if val < 1 or val % 2 == 0:
                raise InvalidParameter(f"structuring element {name} must be odd and >= 1, got {val}")

    @property
    def rx(self) -> int:
        return self.width // 2

    @property
    def ry(self) -> int:
        return self.height // 2

    @classmethod
    def square(cls, radius: int) -> "StructuringElement":
        return cls(2 * radius + 1, 2 * radius + 1)


def classify_snow(img: HsvImage, t: SnowThresholds = SnowThresholds()) -> BinaryMask:
    """Snow is bright and desaturated: S <= s_max and V >= v_min."""
    return BinaryMask((img.s <= t.s_max) & (img.v >= t.v_min))


def _sweep(bits: np.ndarray, radius: int, axis: int, reduce, outside: bool = False) -> np.ndarray:
    """Reduce over a centred window of 2*radius+1 along ``axis``."""
    if radius == 0:
        return bits.copy()
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(bits, pad, constant_values=outside)
    n = bits.shape[axis]

    def window(k):
        idx = [slice(None), slice(None)]
        idx[axis] = slice(k, k + n)
        return padded[tuple(idx)]

    out = window(0).copy()
    for k in range(1, 2 * radius + 1):
        reduce(out, window(k), out=out)
    return out


def erode(m: BinaryMask, se: StructuringElement = StructuringElement(), outside: bool = False) -> BinaryMask:
    """``outside`` is the value assumed for pixels beyond the frame."""
    bits = _sweep(m.bits, se.rx, 1, np.logical_and, outside)
    return BinaryMask(_sweep(bits, se.ry, 0, np.logical_and, outside))


def dilate(m: BinaryMask, se: StructuringElement = StructuringElement()) -> BinaryMask:
    # a centred rectangle is its own reflection
    bits = _sweep(m.bits, se.rx, 1, np.logical_or)
    return BinaryMask(_sweep(bits, se.ry, 0, np.logical_or))


def opening(m: BinaryMask, se: StructuringElement = StructuringElement()) -> BinaryMask:
    return dilate(erode(m, se), se)


def closing(m: BinaryMask, se: StructuringElement = StructuringElement()) -> BinaryMask:
    return erode(dilate(m, se), se, outside=True)


def open_close(m: BinaryMask, se: StructuringElement = StructuringElement()) -> BinaryMask:
    """Opening drops specks smaller than ``se``; the closing then fills pinholes."""
    return closing(opening(m, se), se)
