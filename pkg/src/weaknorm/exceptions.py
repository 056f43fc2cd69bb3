"""Exception types raised across the package."""


class WeakNormError(Exception):
    """Base class for all package errors."""


class UnknownWord(WeakNormError, KeyError):
    pass


class EmptyDataset(WeakNormError, ValueError):
    pass


class TargetTooSmall(WeakNormError, ValueError):
    pass


class DanglingContinuation(WeakNormError, ValueError):
    """A continuation subword appeared where a word must start."""


class MaskOverflow(WeakNormError, ValueError):
    """A word pair needs more ``<mask>`` tokens than the label space allows."""


class SpanOverflow(WeakNormError, ValueError):
    pass


class InvalidPattern(WeakNormError, ValueError):
    pass


class SequenceTooLong(WeakNormError, ValueError):
    pass


class InvalidSoftLabel(WeakNormError, ValueError):
    pass


class SampleTooLarge(WeakNormError, ValueError):
    pass


class LengthMismatch(WeakNormError, ValueError):
    pass


class RowMismatch(WeakNormError, ValueError):
    pass


class ConfigError(WeakNormError, ValueError):
    pass


class DataError(WeakNormError, ValueError):
    pass
