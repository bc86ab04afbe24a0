"""End-to-end road detection: filtering, snow classification, triangle fit.

Stage order: rain/snow removal, shadow removal, optional light filter (all
in RGB), then HSV conversion, Gaussian blur, V-channel equalization, snow
classification, opening+closing, triangle fit and road extraction.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image, ImageDraw

from .colorspace import rgb_to_hsv
from .errors import ConfigError, DetectionFailed, InvalidParameter
from .filters import (
    LightFilterParams,
    RainSnowParams,
    ShadowParams,
    detect_shadow_mask,
    equalize_value_channel,
    gaussian_blur,
    light_filter,
    remove_rain_snow,
    remove_shadow,
)
from .imagecore import BinaryMask, HsvImage, RgbImage
from .segmentation import SnowThresholds, StructuringElement, classify_snow, open_close
from .vanishing import RoadRegion, Triangle, VanishingPoint, extract_road, fit_triangle

STAGE_NAMES = ("hsv", "blurred", "equalized", "snow-mask", "opened", "triangle-overlay")

_TRUE = {"true", "on", "yes", "1"}
_FALSE = {"false", "off", "no", "0"}


@dataclass(frozen=True)
class PipelineConfig:
    gaussian: bool = True
    gaussian_sigma: float = 1.5
    equalize: bool = True
    light_filter: bool = False
    lambda_max: float = 0.6
    shadow: bool = True
    shadow_v_threshold: int = 60
    shadow_s_threshold: int = 40
    shadow_buffer_radius: int = 7
    rain_snow: bool = True
    rain_median_radius: int = 2
    rain_streak_threshold: int = 40
    rain_alpha: float = 0.5
    snow_s_max: int = 30
    snow_v_min: int = 150
    se_width: int = 5
    se_height: int = 5
    min_coverage: float = 0.02
    min_base_width_frac: float = 0.10

    def __post_init__(self):
        if not self.gaussian_sigma > 0:
            raise ConfigError(f"gaussian_sigma must be > 0, got {self.gaussian_sigma}")
        if not 0 <= self.min_coverage <= 1 or not 0 <= self.min_base_width_frac <= 1:
            raise ConfigError("min_coverage and min_base_width_frac must lie in [0, 1]")
        try:
            self.light_params, self.shadow_params, self.rain_params, self.snow_thresholds, self.se
        except InvalidParameter as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def light_params(self) -> LightFilterParams:
        return LightFilterParams(self.lambda_max)

    @property
    def shadow_params(self) -> ShadowParams:
        return ShadowParams(self.shadow_v_threshold, self.shadow_s_threshold, self.shadow_buffer_radius)

    @property
    def rain_params(self) -> RainSnowParams:
        return RainSnowParams(self.rain_median_radius, self.rain_streak_threshold, self.rain_alpha)

    @property
    def snow_thresholds(self) -> SnowThresholds:
        return SnowThresholds(self.snow_s_max, self.snow_v_min)

    @property
    def se(self) -> StructuringElement:
        return StructuringElement(self.se_width, self.se_height)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, bool):
                val = "true" if val else "false"
            lines.append(f"{f.name} = {val!r}" if isinstance(val, float) else f"{f.name} = {val}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "PipelineConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
        types = {f.name: f.type for f in fields(cls)}
        values: dict = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = (part.strip() for part in line.partition("="))
            if not sep or not key or not val:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            if key not in types:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            values[key] = _parse_value(types[key], val, key, lineno)
        return cls(**values)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.loads(text)


def _parse_value(kind: str, val: str, key: str, lineno: int):
    try:
        if kind == "bool":
            low = val.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(val)
        if kind == "int":
            return int(val)
        return float(val)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects {kind}, got {val!r}") from None


@dataclass
class DetectionResult:
    road: RoadRegion
    timings_ms: dict[str, float] = field(default_factory=dict)
    stage_artifacts: Optional[dict] = None

    @property
    def vanishing_point(self) -> VanishingPoint:
        return self.road.vanishing_point

    @property
    def triangle(self) -> Triangle:
        return self.road.triangle

    @property
    def mask(self) -> BinaryMask:
        return self.road.mask

    def to_json_dict(self, cfg: Optional[PipelineConfig] = None) -> dict:
        vp = self.vanishing_point
        out = {
            "vanishing_point": {"x": vp.x, "y": vp.y},
            "triangle": self.triangle.as_dict(),
            "road_pixel_count": self.mask.count(),
            "timings_ms": dict(self.timings_ms),
        }
        if cfg is not None:
            out["config"] = cfg.as_dict()
        return out


def _hsv_preview(img: HsvImage) -> RgbImage:
    return RgbImage(img.data)


def run_pipeline(img: RgbImage, cfg: PipelineConfig = PipelineConfig(), keep_stages: bool = False) -> DetectionResult:
    """Detect the snow-covered road in ``img``.

    Raises NoRoadDetected / DegenerateBase when no road triangle can be fit.
    With ``keep_stages`` the intermediate images are returned (and, on
    failure, attached to the exception as ``stage_artifacts``).
    """
    stages: dict = {}
    timings: dict[str, float] = {}

    def timed(name, fn, *args):
        t0 = time.perf_counter()
        out = fn(*args)
        timings[name] = (time.perf_counter() - t0) * 1000.0
        return out

    try:
        rgb = img
        if cfg.rain_snow:
            rgb = timed("rain_snow", remove_rain_snow, rgb, cfg.rain_params)
        if cfg.shadow:
            shadow = timed("shadow_detect", lambda: detect_shadow_mask(rgb_to_hsv(rgb), cfg.shadow_params))
            rgb = timed("shadow", remove_shadow, rgb, shadow, cfg.shadow_params)
        if cfg.light_filter:
            rgb = timed("light_filter", light_filter, rgb, cfg.light_params)

        hsv = timed("hsv", rgb_to_hsv, rgb)
        stages["hsv"] = _hsv_preview(hsv)
        if cfg.gaussian:
            hsv = timed("blur", gaussian_blur, hsv, cfg.gaussian_sigma)
        stages["blurred"] = _hsv_preview(hsv)
        if cfg.equalize:
            hsv = timed("equalize", equalize_value_channel, hsv)
        stages["equalized"] = _hsv_preview(hsv)

        snow = timed("classify", classify_snow, hsv, cfg.snow_thresholds)
        stages["snow-mask"] = snow
        opened = timed("morphology", open_close, snow, cfg.se)
        stages["opened"] = opened

        tri = timed("fit_triangle", fit_triangle, opened, cfg.min_coverage, cfg.min_base_width_frac)
        road = timed("extract_road", extract_road, opened, tri)
        stages["triangle-overlay"] = render_overlay(img, road)
    except DetectionFailed as exc:
        if keep_stages:
            exc.stage_artifacts = stages
        raise
    return DetectionResult(road, timings, stages if keep_stages else None)


def render_overlay(img: RgbImage, road: RoadRegion) -> RgbImage:
    """Road tinted green at 50%, triangle edges red, vanishing point as a red circle."""
    data = img.data.astype(np.int64)
    m = road.mask.bits
    data[m] = (data[m] + np.array([0, 255, 0]) + 1) // 2
    canvas = Image.fromarray(data.astype(np.uint8))
    draw = ImageDraw.Draw(canvas)
    t = road.triangle
    verts = t.vertices()
    draw.line(verts + [verts[0]], fill=(255, 0, 0), width=1)
    vp = road.vanishing_point
    draw.ellipse((vp.x - 4, vp.y - 4, vp.x + 4, vp.y + 4), outline=(255, 0, 0), width=1)
    return RgbImage(np.asarray(canvas))

