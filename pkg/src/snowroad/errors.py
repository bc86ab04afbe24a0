"""Exception and warning classes shared across the pipeline."""


class SnowRoadError(Exception):
    """Base class for every error raised by this package."""


class UnsupportedFormat(SnowRoadError, ValueError):
    pass


class CorruptData(SnowRoadError, ValueError):
    pass


class InvalidParameter(SnowRoadError, ValueError):
    pass


class DimensionMismatch(SnowRoadError, ValueError):
    pass


class EmptyCorpus(SnowRoadError, ValueError):
    pass


class InvalidSpec(SnowRoadError, ValueError):
    pass


class ConfigError(InvalidParameter):
    """Malformed config file, unknown key or out-of-range value."""


class DetectionFailed(SnowRoadError):
    """The image yields no usable road region."""


class NoRoadDetected(DetectionFailed):
    pass


class DegenerateBase(DetectionFailed):
    pass


class DegenerateRegionWarning(UserWarning):
    """A filter fell back to the identity because its statistics were undefined."""
