"""RGB -> HSV in half-degree hue units.

V = max(R, G, B), C = V - min(R, G, B), S = 255 C / V and the three-branch
hue below. All rounding is done in exact integer arithmetic:

    V == R:  H = 30 (G - B) / C          (negative results get +180)
    V == G:  H = 60 + 30 (B - R) / C
    V == B:  H = 120 + 30 (R - G) / C

H and S are rounded half-up; a hue that rounds to 180 wraps to 0. Ties on
the max channel resolve in R, G, B order. C == 0 gives H = 0.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .imagecore import HsvImage, RgbImage, div_round_half_up


class HsvPixel(NamedTuple):
    h: int
    s: int
    v: int


def _hsv_arrays(r: np.ndarray, g: np.ndarray, b: np.ndarray):
    r = r.astype(np.int64)
    g = g.astype(np.int64)
    b = b.astype(np.int64)
    v = np.maximum(np.maximum(r, g), b)
    c = v - np.minimum(np.minimum(r, g), b)

    s = np.zeros_like(v)
    nz = v > 0
    s[nz] = div_round_half_up(255 * c[nz], v[nz])

    # hue numerator over denominator c, branch priority R > G > B
    num = np.where(
        v == r,
        30 * (g - b),
        np.where(v == g, 60 * c + 30 * (b - r), 120 * c + 30 * (r - g)),
    )
    num = np.where(num < 0, num + 180 * c, num)
    h = np.zeros_like(v)
    chroma = c > 0
    h[chroma] = div_round_half_up(num[chroma], c[chroma]) % 180
    return h, s, v


def rgb_to_hsv_pixel(r: int, g: int, b: int) -> HsvPixel:
    for name, val in (("r", r), ("g", g), ("b", b)):
        if not 0 <= val <= 255:
            raise ValueError(f"{name}={val} outside [0, 255]")
    h, s, v = _hsv_arrays(np.array([r]), np.array([g]), np.array([b]))
    return HsvPixel(int(h[0]), int(s[0]), int(v[0]))


def rgb_to_hsv(img: RgbImage) -> HsvImage:
    d = img.data
    h, s, v = _hsv_arrays(d[..., 0], d[..., 1], d[..., 2])
    return HsvImage(np.stack([h, s, v], axis=-1).astype(np.uint8))
