"""Exception types shared across the package."""


class TopocubeError(Exception):
    """Base class for all errors raised by topocube."""


class FormatError(TopocubeError):
    """A file does not match the expected on-disk format."""


class SizeMismatch(TopocubeError):
    """Array sizes or volume dimensions are incompatible."""


class InvalidValue(TopocubeError):
    """Data contains values outside the allowed domain (NaN, Inf, range)."""


class InvalidParameter(TopocubeError):
    """A parameter is outside its documented range."""


class DegenerateInput(TopocubeError):
    """The input is degenerate for the requested operation (e.g. constant volume)."""


class DimMismatch(TopocubeError):
    """Persistence diagrams of different homology dimensions were combined."""


class TooLarge(TopocubeError):
    """Input exceeds the size limit of a reference implementation."""
