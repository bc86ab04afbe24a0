"""Seeded synthetic snowy-forest road scenes with exact ground-truth masks.

Randomness comes from numpy's PCG64 generator (``np.random.default_rng``).
Corpus scene ``i`` is rendered with seed ``seed + i``; its road jitter draws
from a separate stream keyed on the same derived seed.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .colorspace import rgb_to_hsv_pixel
from .errors import InvalidParameter, InvalidSpec
from .filters import simulate_rain_snow
from .imagecore import BinaryMask, RgbImage, save_image
from .segmentation import SnowThresholds, StructuringElement, dilate
from .vanishing import Triangle, rasterize_triangle

Color = tuple[float, float, float]

_JITTER_STREAM = 0x5EED


def _default_road() -> Triangle:
    return Triangle(apex_x=160.0, apex_y=80.0, base_left=40, base_right=280, base_y=239)


@dataclass(frozen=True)
class SceneSpec:
    width: int = 320
    height: int = 240
    road: Triangle = field(default_factory=_default_road)
    curvature: float = 0.0
    snow_mean: Color = (232.0, 236.0, 242.0)
    snow_std: Color = (4.0, 4.0, 4.0)
    foliage_mean: Color = (62.0, 84.0, 52.0)
    foliage_std: Color = (10.0, 12.0, 10.0)
    speck_count: int = 30
    speck_size: int = 3
    streak_count: int = 150
    streak_length: int = 12
    streak_alpha: float = 0.3
    seed: int = 0

    def validate(self, thresholds: SnowThresholds = SnowThresholds()) -> None:
        if self.width < 8 or self.height < 8:
            raise InvalidSpec(f"scene {self.width}x{self.height} is too small")
        if self.road.base_y != self.height - 1:
            raise InvalidSpec("road base must lie on the bottom row")
        try:
            self.road.check_bounds(self.width, self.height)
        except InvalidParameter as exc:
            raise InvalidSpec(str(exc)) from exc
        if self.road.base_left < 0 or self.road.base_right > self.width - 1:
            raise InvalidSpec("road base leaves the frame")
        for name in ("snow_mean", "foliage_mean"):
            c = getattr(self, name)
            if len(c) != 3 or not all(0 <= v <= 255 for v in c):
                raise InvalidSpec(f"{name} must be three values in [0, 255]")
        for name in ("snow_std", "foliage_std"):
            c = getattr(self, name)
            if len(c) != 3 or not all(v >= 0 for v in c):
                raise InvalidSpec(f"{name} must be three non-negative values")
        if self.speck_count < 0 or self.speck_size < 1 or self.streak_count < 0 or self.streak_length < 1:
            raise InvalidSpec("speck/streak counts must be >= 0 and sizes >= 1")
        if not 0.0 <= self.streak_alpha <= 1.0:
            raise InvalidSpec(f"streak_alpha must lie in [0, 1], got {self.streak_alpha}")
        if not 0 <= self.seed < 2**64:
            raise InvalidSpec("seed must be a 64-bit unsigned integer")
        hsv = rgb_to_hsv_pixel(*(int(math.floor(v + 0.5)) for v in self.snow_mean))
        if hsv.s > thresholds.s_max or hsv.v < thresholds.v_min:
            raise InvalidSpec(f"snow colour {self.snow_mean} (HSV {tuple(hsv)}) falls outside the snow thresholds")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["road"] = self.road.as_dict()
        for k in ("snow_mean", "snow_std", "foliage_mean", "foliage_std"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise InvalidSpec(f"unknown scene spec keys: {sorted(unknown)}")
        kw = dict(d)
        try:
            if "road" in kw:
                r = kw["road"]
                kw["road"] = Triangle(float(r["apex_x"]), float(r["apex_y"]), int(r["base_left"]), int(r["base_right"]), int(r["base_y"]))
            for k in ("snow_mean", "snow_std", "foliage_mean", "foliage_std"):
                if k in kw:
                    kw[k] = tuple(float(v) for v in kw[k])
            spec = cls(**kw)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"bad scene spec: {exc}") from exc
        if "road" not in d and (spec.width, spec.height) != (320, 240):
            spec = replace(spec, road=scale_road(_default_road(), 320, 240, spec.width, spec.height))
        return spec


def scale_road(t: Triangle, w0: int, h0: int, w1: int, h1: int) -> Triangle:
    sx, sy = (w1 - 1) / (w0 - 1), (h1 - 1) / (h0 - 1)
    return Triangle(
        float(round(t.apex_x * sx)), float(round(t.apex_y * sy)),
        int(round(t.base_left * sx)), int(round(t.base_right * sx)), h1 - 1,
    )


def road_mask(spec: SceneSpec) -> BinaryMask:
    """Ground-truth road; a straight road is exactly the triangle raster.

    With curvature the centre line is displaced by
    ``curvature * (base_y - y)**2 / base_y`` while the width still grows
    linearly from the apex row to the base.
    """
    t = spec.road
    if spec.curvature == 0:
        return rasterize_triangle(t, spec.width, spec.height)
    y = np.arange(spec.height, dtype=np.float64)
    frac = (y - t.apex_y) / (t.base_y - t.apex_y)
    centre = t.apex_x + ((t.base_left + t.base_right) / 2 - t.apex_x) * frac
    centre = centre + spec.curvature * (t.base_y - y) ** 2 / t.base_y
    half = (t.base_right - t.base_left) * frac / 2
    lo = np.ceil(centre - half - 1e-7)
    hi = np.floor(centre + half + 1e-7)
    rows_ok = (frac >= 0) & (y <= t.base_y)
    cols = np.arange(spec.width)[None, :]
    bits = (cols >= lo[:, None]) & (cols <= hi[:, None]) & rows_ok[:, None]
    return BinaryMask(bits)


def _noisy_fill(rng: np.random.Generator, shape, mean: Color, std: Color) -> np.ndarray:
    noise = rng.standard_normal(shape + (3,)) * np.asarray(std)
    return np.asarray(mean) + noise


def _place_specks(rng: np.random.Generator, spec: SceneSpec, road: np.ndarray) -> np.ndarray:
    """Square snow specks in the foliage, kept an SE-width apart from the road and each other."""
    specks = np.zeros_like(road)
    if spec.speck_count == 0:
        return specks
    gap = StructuringElement().width
    blocked = dilate(BinaryMask(road), StructuringElement.square(gap)).bits.copy()
    size = spec.speck_size
    placed = 0
    for _ in range(50 * spec.speck_count):
        if placed == spec.speck_count:
            break
        x = int(rng.integers(0, spec.width - size + 1))
        y = int(rng.integers(0, spec.height - size + 1))
        if blocked[y:y + size, x:x + size].any():
            continue
        specks[y:y + size, x:x + size] = True
        blocked[max(0, y - gap):y + size + gap, max(0, x - gap):x + size + gap] = True
        placed += 1
    return specks


def _streak_layer(rng: np.random.Generator, spec: SceneSpec) -> np.ndarray:
    """Boolean map of thin, near-vertical falling-snow streaks."""
    layer = np.zeros((spec.height, spec.width), dtype=bool)
    for _ in range(spec.streak_count):
        x0 = rng.uniform(0, spec.width)
        y0 = rng.uniform(0, spec.height)
        length = rng.uniform(0.5, 1.0) * spec.streak_length
        angle = rng.uniform(-0.35, 0.35)
        steps = max(2, int(math.ceil(length)) + 1)
        t = np.linspace(0.0, length, steps)
        xs = np.floor(x0 + t * math.sin(angle)).astype(int)
        ys = np.floor(y0 + t * math.cos(angle)).astype(int)
        ok = (xs >= 0) & (xs < spec.width) & (ys >= 0) & (ys < spec.height)
        layer[ys[ok], xs[ok]] = True
    return layer


def generate_scene(spec: SceneSpec) -> tuple[RgbImage, BinaryMask]:
    """Render one scene; returns (image, ground-truth road mask)."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    truth = road_mask(spec)
    road = truth.bits
    shape = (spec.height, spec.width)

    img = _noisy_fill(rng, shape, spec.foliage_mean, spec.foliage_std)
    snow = _noisy_fill(rng, shape, spec.snow_mean, spec.snow_std)
    img[road] = snow[road]
    specks = _place_specks(rng, spec, road)
    img[specks] = snow[specks]
    clean = RgbImage(np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8))

    if spec.streak_count and spec.streak_alpha > 0:
        drops = clean.data.copy()
        drops[_streak_layer(rng, spec)] = 255
        clean = simulate_rain_snow(clean, RgbImage(drops), spec.streak_alpha)
    return clean, truth


def corpus_scene_spec(base: SceneSpec, seed: int, index: int) -> SceneSpec:
    """Spec of corpus scene ``index``: jittered road, seed ``seed + index``."""
    derived = seed + index
    rng = np.random.default_rng([derived, _JITTER_STREAM])
    t, w, h = base.road, base.width, base.height
    apex_x = float(np.clip(round(t.apex_x + rng.uniform(-0.12, 0.12) * w), 0.2 * w, 0.8 * w))
    apex_y = float(np.clip(round(t.apex_y + rng.uniform(-0.08, 0.08) * h), 0, t.base_y - 0.3 * h))
    left = int(np.clip(round(t.base_left + rng.uniform(-0.08, 0.08) * w), 0, w - 1))
    right = int(np.clip(round(t.base_right + rng.uniform(-0.08, 0.08) * w), 0, w - 1))
    if right - left < 0.3 * w:
        left, right = t.base_left, t.base_right
    road = Triangle(apex_x, apex_y, left, right, t.base_y)
    return replace(base, road=road, seed=derived)


def scene_id(index: int) -> str:
    return f"scene_{index:04d}"


def generate_corpus(base: SceneSpec, n: int, seed: int) -> list[tuple[RgbImage, BinaryMask, str]]:
    if n < 1:
        raise InvalidSpec(f"corpus size must be >= 1, got {n}")
    base.validate()
    return [(*generate_scene(corpus_scene_spec(base, seed, i)), scene_id(i)) for i in range(n)]


def write_corpus(out_dir, base: SceneSpec, n: int, seed: int) -> list[str]:
    """Generate and write ``images/<id>.ppm``, ``truth/<id>.pgm`` and ``corpus.json``."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "truth").mkdir(parents=True, exist_ok=True)
    ids = []
    for img, truth, image_id in generate_corpus(base, n, seed):
        save_image(img, out / "images" / f"{image_id}.ppm")
        save_image(truth, out / "truth" / f"{image_id}.pgm")
        ids.append(image_id)
    meta = {"spec": base.to_dict(), "seed": seed, "n": n, "ids": ids}
    (out / "corpus.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return ids


def load_spec(path) -> SceneSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidSpec(f"{path}: expected a JSON object")
    return SceneSpec.from_dict(data)
