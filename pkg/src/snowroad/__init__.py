"""Road detection for snow-covered forest roads from a single RGB camera."""
from .colorspace import rgb_to_hsv, rgb_to_hsv_pixel
from .errors import (
    CorruptData,
    DegenerateBase,
    DetectionFailed,
    InvalidParameter,
    NoRoadDetected,
    UnsupportedFormat,
)
from .evaluation import confusion, evaluate_corpus, fnr, fpr
from .imagecore import BinaryMask, GrayImage, HsvImage, RgbImage, load_image, save_image
from .pipeline import DetectionResult, PipelineConfig, run_pipeline
from .synthgen import SceneSpec, generate_corpus, generate_scene
from .vanishing import Triangle, extract_road, fit_triangle

__version__ = "0.1.0"
