"""Exception hierarchy shared across segbench."""


class SegbenchError(Exception):
    """Base class for all segbench errors."""


class UnsupportedFormatError(SegbenchError):
    """Image file is not an 8-bit gray/RGB PNG."""


class DimensionMismatchError(SegbenchError):
    """Two rasters/masks that must share dimensions do not."""


class OutOfBoundsError(SegbenchError):
    """A stroke point falls outside the image rectangle."""


class NotGrayscaleError(SegbenchError):
    """Operation requires a single-channel raster."""


class EmptyHistogramError(SegbenchError):
    """Histogram contains no pixels."""


class NonPositiveSigmaError(SegbenchError):
    """Gaussian blur requires sigma > 0."""


class InvalidThresholdsError(SegbenchError):
    """Canny requires 0 < low < high."""


class NoSeedsError(SegbenchError):
    """Region growing requires at least one foreground seed."""


class InsufficientLabelsError(SegbenchError):
    """Training/segmentation input is missing a label class."""


class MissingSeedClassError(InsufficientLabelsError):
    """Graph cut requires at least one seed of each class."""


class FeatureMismatchError(SegbenchError):
    """Feature stack does not match the features a forest was trained on."""


class TooFewSamplesError(SegbenchError):
    """Fewer samples than mixture components."""


class DegenerateInitError(SegbenchError):
    """GrabCut initialization has an empty interior or exterior."""


class DegenerateGtError(SegbenchError):
    """Ground truth has an empty foreground or background."""


class EmptyRecordError(SegbenchError):
    """Session record holds no masks."""


class EmptyGroundTruthError(SegbenchError):
    """alpha/beta need a nonempty ground-truth mask."""


class MissingMaskError(SegbenchError):
    """External mask manifest lacks an entry or file for an image."""


class EmptyResultsError(SegbenchError):
    """Report export called with no session records."""


class ConfigError(SegbenchError):
    """Run configuration is invalid."""
