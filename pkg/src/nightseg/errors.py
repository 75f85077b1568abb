"""Exception types shared across the pipeline."""


class NightsegError(Exception):
    """Base class for all pipeline errors."""


class MissingFile(NightsegError):
    """A required input file does not exist."""


class DecodeError(NightsegError):
    """A file exists but cannot be decoded in the expected format."""


class InvalidClassValue(NightsegError):
    """A label map contains a class index outside [0, K-1] other than the ignore value."""


class InvalidSize(NightsegError):
    """A requested output size is not a positive pixel count."""


class RangeTagMismatch(NightsegError):
    """An operation received an image tagged with the wrong value range."""


class ShapeError(NightsegError):
    """Array shapes are incompatible with the operation."""


class EmptyDataset(NightsegError):
    """A training set contains no usable records."""


class NonFiniteLoss(NightsegError):
    """A training loss became NaN or infinite; the run is aborted."""


class LabelShapeMismatch(NightsegError):
    """A record's label is missing or does not match its image."""


class EmptyDirectory(NightsegError):
    """A directory holds no decodable images."""


class DuplicateStem(NightsegError):
    """Two files in one directory share a filename stem."""


class KTooLarge(NightsegError):
    """More conversions requested than eligible records exist."""


class ResolutionMismatch(NightsegError):
    """An image's size disagrees with its manifest's declared resolution."""


class ClassOutOfRange(NightsegError):
    """A prediction or ground-truth value exceeds the class count."""


class KMismatch(NightsegError):
    """Two confusion matrices disagree on their class count."""


class EmptyMatrix(NightsegError):
    """A metric was requested from a confusion matrix with no counted pixels."""


class DuplicateK(NightsegError):
    """A sweep was given the same synthetic-image count twice."""


class InvalidBinSize(NightsegError):
    """A pyramid-pooling bin size is below 1 or exceeds the feature map."""


class UnsupportedWeightsVersion(NightsegError):
    """A weights file declares a container version this loader does not know."""


class AllIgnoredWarning(UserWarning):
    """Every pixel in a loss target was the ignore value; the loss is zero."""
