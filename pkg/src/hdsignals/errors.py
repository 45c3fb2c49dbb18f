"""Exception types raised across the pipeline.

Every error derives from :class:`HDSignalsError` so callers (and the CLI) can
catch the whole family at once. Most also subclass a builtin so that ordinary
``except ValueError`` code keeps working.
"""


class HDSignalsError(Exception):
    """Base class for all pipeline errors."""


# -- signal_io -----------------------------------------------------------------
class MissingFile(HDSignalsError, FileNotFoundError):
    pass


class ShapeMismatch(HDSignalsError, ValueError):
    pass


class NonFiniteSample(HDSignalsError, ValueError):
    pass


class UnknownChannel(HDSignalsError, ValueError):
    pass


class BadMagic(HDSignalsError, ValueError):
    pass


class UnsupportedDtype(HDSignalsError, ValueError):
    pass


class HeaderParse(HDSignalsError, ValueError):
    pass


class DuplicatePatient(HDSignalsError, ValueError):
    pass


class MissingModalityPath(HDSignalsError, ValueError):
    pass


class UnknownDiagnosis(HDSignalsError, ValueError):
    pass


# -- preprocess ----------------------------------------------------------------
class InvalidBand(HDSignalsError, ValueError):
    pass


class EmptySignal(HDSignalsError, ValueError):
    pass


class EpochTooLong(HDSignalsError, ValueError):
    pass


class NonPositiveStep(HDSignalsError, ValueError):
    pass


class AllEpochsRejected(HDSignalsError, ValueError):
    pass


class EmptyEpochSet(HDSignalsError, ValueError):
    pass


# -- features ------------------------------------------------------------------
class ZeroVariance(HDSignalsError, ValueError):
    pass


class ZeroMean(HDSignalsError, ValueError):
    pass


class DegenerateLengths(HDSignalsError, ValueError):
    pass


class SignalTooShort(HDSignalsError, ValueError):
    pass


class SegmentTooLong(HDSignalsError, ValueError):
    pass


class BandOutOfRange(HDSignalsError, ValueError):
    pass


class MissingModality(HDSignalsError, KeyError):
    pass


class FeatureComputationFailed(HDSignalsError, ValueError):
    pass


# -- models --------------------------------------------------------------------
class SingleClass(HDSignalsError, ValueError):
    pass


class NonFiniteInput(HDSignalsError, ValueError):
    pass


class FeatureCountMismatch(HDSignalsError, ValueError):
    pass


class SingularCovariance(HDSignalsError, ValueError):
    pass


class ClassTooSmall(HDSignalsError, ValueError):
    pass


class NotAForest(HDSignalsError, TypeError):
    pass


class DidNotConverge(UserWarning):
    """Warning emitted when an iterative fit stops at ``max_iter``."""


# -- eval ----------------------------------------------------------------------
class TooFewGroups(HDSignalsError, ValueError):
    pass


class LengthMismatch(HDSignalsError, ValueError):
    pass


class OneClassOnly(HDSignalsError, ValueError):
    pass


class EmptyGrid(HDSignalsError, ValueError):
    pass


class FoldError(HDSignalsError):
    """A model error raised while fitting or scoring one CV fold."""

    def __init__(self, fold: int, cause: Exception):
        super().__init__(f"fold {fold}: {type(cause).__name__}: {cause}")
        self.fold = fold
        self.cause = cause


# -- stats ---------------------------------------------------------------------
class RankDeficient(HDSignalsError, ValueError):
    def __init__(self, message: str, columns=(), indices=()):
        super().__init__(message)
        self.columns = list(columns)
        self.indices = [int(i) for i in indices]


class TooFewRows(HDSignalsError, ValueError):
    pass


# -- cli -----------------------------------------------------------------------
class MissingPreprocessOutput(HDSignalsError, FileNotFoundError):
    pass
