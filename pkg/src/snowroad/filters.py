"""Enhancement and weather-noise filters.

Every filter computes in float64 (or exact integers where a golden value
depends on a tie), then quantizes once with half-up rounding and clamps to
[0, 255].
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import TypeVar

import numpy as np
from scipy.ndimage import median_filter

from .errors import DegenerateRegionWarning, DimensionMismatch, InvalidParameter
from .imagecore import (
    BinaryMask,
    GrayImage,
    HsvImage,
    RgbImage,
    div_round_half_up,
    round_half_up,
)
from .segmentation import StructuringElement, dilate

Img = TypeVar("Img", HsvImage, GrayImage, RgbImage)

LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class LightFilterParams:
    lambda_max: float = 0.6

    def __post_init__(self):
        if not (self.lambda_max > 1 / 3 and self.lambda_max <= 1):
            raise InvalidParameter(f"lambda_max must lie in (1/3, 1], got {self.lambda_max}")


@dataclass(frozen=True)
class ShadowParams:
    v_threshold: int = 60
    s_threshold: int = 40
    buffer_radius: int = 7

    def __post_init__(self):
        if not 0 <= self.v_threshold <= 255 or not 0 <= self.s_threshold <= 255:
            raise InvalidParameter("shadow thresholds must lie in [0, 255]")
        if self.buffer_radius < 1:
            raise InvalidParameter(f"buffer_radius must be >= 1, got {self.buffer_radius}")


@dataclass(frozen=True)
class RainSnowParams:
    """``alpha`` is the share of a streak pixel's excess brightness over the
    background estimate that is attributed to the falling drop."""

    median_radius: int = 2
    streak_threshold: int = 40
    alpha: float = 0.5

    def __post_init__(self):
        if self.median_radius < 1:
            raise InvalidParameter(f"median_radius must be >= 1, got {self.median_radius}")
        if not 0 <= self.streak_threshold <= 255:
            raise InvalidParameter("streak_threshold must lie in [0, 255]")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidParameter(f"alpha must lie in [0, 1], got {self.alpha}")


def _quantize(x: np.ndarray) -> np.ndarray:
    return np.clip(round_half_up(x), 0, 255).astype(np.uint8)


def gray(rgb: np.ndarray) -> np.ndarray:
    """Real-valued Rec. 601 luma of an HxWx3 array."""
    return np.asarray(rgb, dtype=np.float64) @ LUMA


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D kernel of radius ceil(3 sigma)."""
    if not sigma > 0:
        raise InvalidParameter(f"sigma must be > 0, got {sigma}")
    radius = math.ceil(3 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2 * sigma * sigma))
    return k / k.sum()


def _convolve_axis(a: np.ndarray, k: np.ndarray, axis: int) -> np.ndarray:
    r = len(k) // 2
    pad = [(0, 0)] * a.ndim
    pad[axis] = (r, r)
    padded = np.pad(a, pad, mode="edge")
    n = a.shape[axis]
    out = np.zeros_like(a)
    for i, w in enumerate(k):
        idx = [slice(None)] * a.ndim
        idx[axis] = slice(i, i + n)
        out += w * padded[tuple(idx)]
    return out


def gaussian_blur(img: Img, sigma: float) -> Img:
    """Separable Gaussian blur of every channel, edges replicated."""
    k = gaussian_kernel(sigma)
    a = img.data.astype(np.float64)
    a = _convolve_axis(_convolve_axis(a, k, 1), k, 0)
    return type(img)(_quantize(a))


def equalize_value_channel(img: HsvImage) -> HsvImage:
    """Histogram-equalize V; H and S pass through untouched."""
    v = img.v
    n = v.size
    cdf = np.cumsum(np.bincount(v.ravel(), minlength=256)).astype(np.int64)
    cdf_min = int(cdf[cdf > 0][0])
    if n == cdf_min:
        return img
    lut = div_round_half_up(255 * (cdf - cdf_min), n - cdf_min)
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    out = img.data.copy()
    out[..., 2] = lut[v]
    return HsvImage(out)


def detect_shadow_mask(img: HsvImage, p: ShadowParams = ShadowParams()) -> BinaryMask:
    """Shadows are dark but keep their chroma."""
    return BinaryMask((img.v < p.v_threshold) & (img.s >= p.s_threshold))


def remove_shadow(img: RgbImage, shadow: BinaryMask, p: ShadowParams = ShadowParams()) -> RgbImage:
    """Re-light shadow pixels from the statistics of a lit ring around them.

    Each shadow sample maps to ``mu_buff + (I - mu_shadow) / sigma_buff``
    (per channel), where the buffer is the shadow dilated by
    ``p.buffer_radius`` minus the shadow itself. A channel whose buffer
    spread is zero, or an empty buffer, is left unchanged with a warning.
    """
    if shadow.shape != img.shape:
        raise DimensionMismatch(f"shadow mask {shadow.shape} vs image {img.shape}")
    sh = shadow.bits
    if not sh.any():
        return img
    buffer = dilate(shadow, StructuringElement.square(p.buffer_radius)).bits & ~sh
    if not buffer.any():
        warnings.warn("shadow buffer region is empty; shadow left unchanged", DegenerateRegionWarning, stacklevel=2)
        return img

    src = img.data.astype(np.float64)
    out = src.copy()
    for c in range(3):
        chan = src[..., c]
        mu_k = chan[sh].mean()
        mu_buff = chan[buffer].mean()
        sigma_buff = chan[buffer].std()
        if sigma_buff == 0:
            warnings.warn(f"zero buffer spread in channel {c}; channel left unchanged", DegenerateRegionWarning, stacklevel=2)
            continue
        out[..., c][sh] = mu_buff + (chan[sh] - mu_k) / sigma_buff
    res = img.data.copy()
    res[sh] = _quantize(out[sh])
    return RgbImage(res)


def _exact_fraction(x: float) -> Fraction:
    return Fraction(x).limit_denominator(1_000_000)


def simulate_rain_snow(clean: RgbImage, streaks: RgbImage, alpha: float) -> RgbImage:
    """Blend a streak layer over the background: alpha*streak + (1-alpha)*clean."""
    if clean.shape != streaks.shape:
        raise DimensionMismatch(f"clean {clean.shape} vs streaks {streaks.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise InvalidParameter(f"alpha must lie in [0, 1], got {alpha}")
    a = _exact_fraction(alpha)
    p, q = a.numerator, a.denominator
    e = streaks.data.astype(np.int64)
    b = clean.data.astype(np.int64)
    return RgbImage(div_round_half_up(p * e + (q - p) * b, q).astype(np.uint8))


def remove_rain_snow(img: RgbImage, p: RainSnowParams = RainSnowParams()) -> RgbImage:
    """Suppress bright streaks using a median background and a guidance image.

    Streak pixels are those whose luma exceeds the median background's by
    more than ``p.streak_threshold``. The guidance value there is the mean of
    the background luma and the luma of the input with the drop component
    removed; the background colour is rescaled to that luma. All other
    pixels are returned unchanged.
    """
    return _remove_rain_snow(img, p)[0]


def streak_mask(img: RgbImage, p: RainSnowParams = RainSnowParams()) -> BinaryMask:
    return _remove_rain_snow(img, p)[1]


def _remove_rain_snow(img: RgbImage, p: RainSnowParams) -> tuple[RgbImage, BinaryMask]:
    size = 2 * p.median_radius + 1
    src = img.data.astype(np.float64)
    background = median_filter(img.data, size=(size, size, 1), mode="nearest").astype(np.float64)
    bg_gray = gray(background)
    streak = gray(src) - bg_gray > p.streak_threshold
    if not streak.any():
        return img, BinaryMask(streak)

    drop = p.alpha * np.clip(src - background, 0, None)
    j_g = gray(np.clip(src - drop, 0, None))
    guide = round_half_up((bg_gray + j_g) / 2)

    bg_s, guide_s = background[streak], guide[streak]
    bg_l = bg_gray[streak]
    scale = np.divide(guide_s, bg_l, out=np.zeros_like(bg_l), where=bg_l > 0)
    restored = np.where((bg_l > 0)[:, None], bg_s * scale[:, None], guide_s[:, None])
    out = img.data.copy()
    out[streak] = _quantize(restored)
    return RgbImage(out), BinaryMask(streak)


def light_filter(img: RgbImage, p: LightFilterParams = LightFilterParams()) -> RgbImage:
    """Subtract the specular estimate (max - L*sum) / (1 - 3L) from each channel.

    ``L`` is ``p.lambda_max``; evaluated exactly with L as a rational. Any
    achromatic pixel maps to black.
    """
    lam = _exact_fraction(p.lambda_max)
    lp, lq = lam.numerator, lam.denominator
    den = lq - 3 * lp
    if den >= 0:
        raise InvalidParameter(f"lambda_max must exceed 1/3, got {p.lambda_max}")
    d = img.data.astype(np.int64)
    spec_num = lq * d.max(axis=2) - lp * d.sum(axis=2)
    out = div_round_half_up(d * den - spec_num[..., None], den)
    return RgbImage(np.clip(out, 0, 255).astype(np.uint8))
