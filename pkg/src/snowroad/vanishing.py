"""Triangle fitting on the snow mask; the apex is taken as the vanishing point.

Pixel (x, y) has its centre at integer coordinates (x, y); the triangle base
lies on the bottom image row.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import DegenerateBase, DimensionMismatch, InvalidParameter, NoRoadDetected
from .imagecore import BinaryMask, round_half_up

COARSE_STRIDE = 8
BASE_BAND_FRAC = 0.10
BASE_PERCENTILES = (2.0, 98.0)
_EPS = 1e-7


@dataclass(frozen=True)
class Triangle:
    apex_x: float
    apex_y: float
    base_left: int
    base_right: int
    base_y: int

    def __post_init__(self):
        if not self.base_left < self.base_right:
            raise InvalidParameter(f"base_left ({self.base_left}) must be < base_right ({self.base_right})")
        if not 0 <= self.apex_y < self.base_y:
            raise InvalidParameter(f"need 0 <= apex_y < base_y, got apex_y={self.apex_y}, base_y={self.base_y}")

    def check_bounds(self, width: int, height: int) -> None:
        if self.base_y > height - 1 or not 0 <= self.apex_x <= width - 1:
            raise InvalidParameter(f"{self} does not fit a {width}x{height} image")

    @property
    def apex(self) -> tuple[float, float]:
        return self.apex_x, self.apex_y

    def vertices(self) -> list[tuple[float, float]]:
        return [self.apex, (self.base_left, self.base_y), (self.base_right, self.base_y)]

    def as_dict(self) -> dict:
        return {
            "apex_x": self.apex_x,
            "apex_y": self.apex_y,
            "base_left": self.base_left,
            "base_right": self.base_right,
            "base_y": self.base_y,
        }


@dataclass(frozen=True)
class VanishingPoint:
    x: int
    y: int


@dataclass(frozen=True)
class RoadRegion:
    triangle: Triangle
    mask: BinaryMask

    @property
    def vanishing_point(self) -> VanishingPoint:
        return VanishingPoint(int(round_half_up(self.triangle.apex_x)), int(round_half_up(self.triangle.apex_y)))


def iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union; 0 when both masks are empty."""
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    union = int(np.count_nonzero(a.bits | b.bits))
    if union == 0:
        return 0.0
    return int(np.count_nonzero(a.bits & b.bits)) / union


def _row_spans(ax, ay, bl, br, base_y: int, width: int, height: int):
    """Inclusive column spans [lo, hi] of triangles, one row of output per row.

    Parameters are broadcastable arrays of shape (n,); returns two (n, height)
    int arrays where ``hi < lo`` marks an empty row.
    """
    ax, ay, bl, br = (np.asarray(v, dtype=np.float64)[:, None] for v in (ax, ay, bl, br))
    y = np.arange(height, dtype=np.float64)[None, :]
    t = (y - ay) / (base_y - ay)
    inside = (t >= -_EPS) & (y <= base_y)
    lo = np.ceil(ax + (bl - ax) * t - _EPS)
    hi = np.floor(ax + (br - ax) * t + _EPS)
    lo = np.clip(lo, 0, width - 1).astype(np.int64)
    hi = np.clip(hi, -1, width - 1).astype(np.int64)
    hi = np.where(inside, hi, -1)
    lo = np.where(inside, np.maximum(lo, 0), 0)
    return lo, hi


def rasterize_triangle(t: Triangle, width: int, height: int) -> BinaryMask:
    """Pixels whose centre lies inside or on the triangle."""
    t.check_bounds(width, height)
    lo, hi = _row_spans([t.apex_x], [t.apex_y], [t.base_left], [t.base_right], t.base_y, width, height)
    cols = np.arange(width)[None, :]
    return BinaryMask((cols >= lo[0][:, None]) & (cols <= hi[0][:, None]))


class _Scorer:
    """Vectorized IoU of many candidate triangles against one mask."""

    def __init__(self, snow: np.ndarray, base_y: int):
        self.height, self.width = snow.shape
        self.base_y = base_y
        self.prefix = np.zeros((self.height, self.width + 1), dtype=np.int64)
        np.cumsum(snow, axis=1, out=self.prefix[:, 1:])
        self.total = int(self.prefix[:, -1].sum())
        self.rows = np.arange(self.height)[None, :]

    def __call__(self, ax, ay, bl, br) -> np.ndarray:
        lo, hi = _row_spans(ax, ay, bl, br, self.base_y, self.width, self.height)
        filled = hi >= lo
        area = np.where(filled, hi - lo + 1, 0).sum(axis=1)
        hit = self.prefix[self.rows, np.maximum(hi, lo - 1) + 1] - self.prefix[self.rows, lo]
        inter = np.where(filled, hit, 0).sum(axis=1)
        union = area + self.total - inter
        return np.where(union > 0, inter / np.maximum(union, 1), 0.0)


def _pick(scores: np.ndarray, *keys: np.ndarray) -> int:
    """Index of the best score; ties resolved by the keys, smallest first."""
    order = np.lexsort(tuple(reversed(keys)) + (-scores,))
    return int(order[0])


def _base_from_band(snow: np.ndarray) -> tuple[int, int]:
    height = snow.shape[0]
    band = max(1, math.ceil(BASE_BAND_FRAC * height))
    cols = np.nonzero(snow[height - band:])[1]
    if np.unique(cols).size < 2:
        raise DegenerateBase("base band holds fewer than two distinct snow columns")
    lo, hi = np.percentile(cols, BASE_PERCENTILES)
    return int(round_half_up(lo)), int(round_half_up(hi))


def fit_triangle(
    snow: BinaryMask,
    min_coverage: float = 0.02,
    min_base_width_frac: float = 0.10,
) -> Triangle:
    """Fit the triangle with bottom-row base that best overlaps ``snow`` (IoU).

    The base starts at the 2nd/98th percentile snow columns of the bottom 10%
    of rows. The apex is then searched on a stride-8 grid above that band
    and refined with stride 1 around the coarse optimum. Finally apex and
    base corners are polished together by unit-step hill climbing, which
    removes the inward bias of the percentile base. Ties always go to the
    smallest apex_y, then apex_x (then base_left, base_right).

    Raises NoRoadDetected when snow covers less than ``min_coverage`` of the
    frame or the fitted base is narrower than ``min_base_width_frac`` of the
    width, and DegenerateBase when the bottom band cannot define a base.
    """
    bits = snow.bits
    height, width = bits.shape
    if height < 2 or width < 2:
        raise NoRoadDetected(f"image {width}x{height} too small to fit a triangle")
    total = int(np.count_nonzero(bits))
    if total == 0 or total < min_coverage * width * height:
        raise NoRoadDetected(f"snow covers {total / (width * height):.4f} of the frame, below {min_coverage}")

    base_y = height - 1
    bl, br = _base_from_band(bits)
    if bl >= br:
        raise DegenerateBase(f"base collapsed to [{bl}, {br}]")
    score = _Scorer(bits, base_y)

    band_top = height - max(1, math.ceil(BASE_BAND_FRAC * height))
    ys = np.arange(0, max(band_top, 1), COARSE_STRIDE)
    xs = np.arange(0, width, COARSE_STRIDE)
    gy, gx = (g.ravel() for g in np.meshgrid(ys, xs, indexing="ij"))
    n = gx.size
    s = score(gx, gy, np.full(n, bl), np.full(n, br))
    k = _pick(s, gy, gx)
    cx, cy = int(gx[k]), int(gy[k])

    ys = np.arange(max(0, cy - COARSE_STRIDE), min(base_y - 1, cy + COARSE_STRIDE) + 1)
    xs = np.arange(max(0, cx - COARSE_STRIDE), min(width - 1, cx + COARSE_STRIDE) + 1)
    gy, gx = (g.ravel() for g in np.meshgrid(ys, xs, indexing="ij"))
    n = gx.size
    s = score(gx, gy, np.full(n, bl), np.full(n, br))
    k = _pick(s, gy, gx)
    state = np.array([gx[k], gy[k], bl, br], dtype=np.int64)
    best = float(s[k])

    state, best = _hill_climb(score, state, best, width, base_y)
    ax, ay, bl, br = (int(v) for v in state)
    if br - bl < min_base_width_frac * width:
        raise NoRoadDetected(f"fitted base width {br - bl}px is narrower than {min_base_width_frac:.0%} of the frame")
    return Triangle(float(ax), float(ay), bl, br, base_y)


_STEPS = np.array([d for d in product((-1, 0, 1), repeat=4) if any(d)], dtype=np.int64)


def _hill_climb(score: _Scorer, state: np.ndarray, best: float, width: int, base_y: int):
    for _ in range(4 * (width + base_y)):
        cand = state[None, :] + _STEPS
        ok = (
            (cand[:, 0] >= 0) & (cand[:, 0] <= width - 1)
            & (cand[:, 1] >= 0) & (cand[:, 1] <= base_y - 1)
            & (cand[:, 2] >= 0) & (cand[:, 3] <= width - 1)
            & (cand[:, 2] < cand[:, 3])
        )
        cand = cand[ok]
        s = score(cand[:, 0], cand[:, 1], cand[:, 2], cand[:, 3])
        k = _pick(s, cand[:, 1], cand[:, 0], cand[:, 2], cand[:, 3])
        if not s[k] > best:
            break
        state, best = cand[k], float(s[k])
    return state, best


def extract_road(snow: BinaryMask, t: Triangle) -> RoadRegion:
    """Road = snow pixels inside the fitted triangle."""
    tri = rasterize_triangle(t, snow.width, snow.height)
    return RoadRegion(t, snow & tri)
