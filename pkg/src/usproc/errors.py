"""Exception types shared across the toolkit.

Every data-level failure raises a subclass of :class:`UsprocError` whose
message starts with a stable kebab-case name (e.g. ``shape-mismatch``) so
callers and the CLI can surface the error name verbatim.
"""


class UsprocError(Exception):
    """Base class for all data/processing errors in this package."""


class DimensionMismatchError(UsprocError):
    pass


class NonFiniteSampleError(UsprocError):
    pass


class NonPositiveSpeedError(UsprocError):
    pass


class ShapeMismatchError(UsprocError):
    pass


class GridMismatchError(UsprocError):
    pass


class DepthExceedsWindowError(UsprocError):
    pass


class EmptyEventsError(UsprocError):
    pass


class SingularMatrixError(UsprocError):
    pass


class NoConvergenceError(UsprocError):
    pass


class AdjointMismatchError(UsprocError):
    pass


class StepTooLargeError(UsprocError):
    pass


class AllZeroEnvelopeError(UsprocError):
    pass


class NoPeakError(UsprocError):
    pass


class HalfLevelNotCrossedError(UsprocError):
    pass


class EmptyRegionError(UsprocError):
    pass


class ZeroMeanError(UsprocError):
    pass


class ZeroVarianceError(UsprocError):
    pass


class FileFormatError(UsprocError):
    """Bad magic bytes or truncated payload in a binary file."""


class ConfigError(Exception):
    """Usage-level configuration problem (unknown key, bad value).

    Deliberately not a :class:`UsprocError`: the CLI maps it to a usage
    error (exit code 1) rather than a data error (exit code 2).
    """
