"""Exception types raised across the package."""


class InharmonicityError(Exception):
    """Base class for all errors raised by this package."""


class AudioReadError(InharmonicityError):
    """The audio file could not be opened or parsed."""


class UnsupportedFormatError(InharmonicityError):
    """The file is a WAV file, but its encoding or layout is not supported."""


class EmptyAudioError(InharmonicityError):
    """The audio contains no samples."""


class SilentAudioError(InharmonicityError):
    """An operation needing a nonzero signal received digital silence."""


class GateError(InharmonicityError):
    """No frame of the clip passed the level gate."""


class NoValidFramesError(InharmonicityError):
    """Not enough audio to form a single analysis frame."""


class DegenerateSpectrumError(InharmonicityError):
    """The band spectrum is too short or too sparse for the requested measure."""


class FitError(InharmonicityError):
    """A normalization or PCA fit could not be computed from the data."""


class ManifestError(InharmonicityError):
    """The corpus manifest is malformed."""
