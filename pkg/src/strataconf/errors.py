"""Exception types shared across the package."""


class FormatError(ValueError):
    """A file does not conform to its declared on-disk format."""


class LabelError(ValueError):
    """A label is outside the valid class range."""


class SplitError(ValueError):
    """A requested dataset split would leave a partition empty."""


class CalibrationError(ValueError):
    """Calibration is impossible with the given data."""


class DimensionError(ValueError):
    """Array shapes are inconsistent with each other or with a fitted artifact."""


class EntropyUndefined(ValueError):
    """Spatial entropy is undefined (all-zero heatmap)."""


class CorrelationUndefined(ValueError):
    """A correlation coefficient is undefined (constant input or single group)."""
