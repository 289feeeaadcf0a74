"""Exception hierarchy shared across the package.

``ValidationError`` subclasses mean the caller handed us bad input and map
to CLI exit code 2 / HTTP 4xx; everything else is a runtime failure.
"""


class TsLatentError(Exception):
    """Base class for all package errors."""


class ValidationError(TsLatentError):
    """Invalid user-supplied configuration or arguments."""


# core_ts
class WindowTooLong(ValidationError):
    pass


class NoDominantPeriod(TsLatentError):
    pass


class FormatError(ValidationError):
    """Malformed delimited-text series file."""


# synth_datasets
class AnomalyOutOfRange(ValidationError):
    pass


class OverlappingAnomalies(ValidationError):
    pass


# encoder
class InvalidConfig(ValidationError):
    pass


class WindowShorterThanPatch(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class NoMaskedPatches(ValidationError):
    pass


class CheckpointError(TsLatentError):
    """Corrupt or incompatible checkpoint file."""


# finetune
class NotEnoughWindows(ValidationError):
    pass


class RegionTooShort(ValidationError):
    pass


class ZeroBaseline(ValidationError):
    pass


class DivergedLoss(TsLatentError):
    """Training loss became non-finite; carries the partial run record."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


# projection
class DegenerateInput(ValidationError):
    pass


class PerplexityInfeasible(ValidationError):
    pass


# analysis
class InsufficientRows(ValidationError):
    pass


class DegenerateTarget(ValidationError):
    pass


# workbench
class NotFound(TsLatentError):
    pass


class ChecksumMismatch(TsLatentError):
    pass


class IndexOutOfRange(ValidationError):
    pass
