"""Exception hierarchy shared by every stage.

``InputError`` subclasses mean the input or configuration is bad (CLI exit
code 1); ``ProcessingError`` subclasses mean valid input could not be
processed (exit code 2).
"""


class TactileHarError(Exception):
    exit_code = 2


class InputError(TactileHarError):
    exit_code = 1


class ProcessingError(TactileHarError):
    exit_code = 2


# skeleton files and preprocessing
class MalformedHeader(InputError):
    pass


class FrameCountMismatch(InputError):
    pass


class MalformedRecord(InputError):
    pass


class NonFiniteCoordinate(InputError):
    pass


class UnsupportedJointCount(InputError):
    pass


class WrongJointCount(ProcessingError):
    pass


class InvalidJoint(ProcessingError):
    pass


class EmptySequence(ProcessingError):
    pass


class DegenerateBone(ProcessingError):
    pass


class ZeroTargetLength(ProcessingError):
    pass


# graphs
class InvalidEdgeIndex(InputError):
    pass


class ZeroFrames(ProcessingError):
    pass


class EvenWindow(ProcessingError):
    pass


# model weights and inference
class DimMismatch(ProcessingError):
    pass


class BadMagic(InputError):
    pass


class VersionUnsupported(InputError):
    pass


class DimChainBroken(InputError):
    pass


class TruncatedStream(InputError):
    pass


class ChecksumMismatch(InputError):
    pass


# depth
class DimMismatchAcrossFrames(InputError):
    pass


class AllBelowThreshold(ProcessingError):
    pass


class NoCentroids(InputError):
    pass


class MalformedImage(InputError):
    pass


# fusion and evaluation
class ClassListMismatch(ProcessingError):
    pass


class EmptyScores(ProcessingError):
    pass


class UnknownClass(InputError):
    pass


# tactile codec
class BadFrameLength(InputError):
    pass


class BadVersion(InputError):
    pass


class BadChecksum(InputError):
    pass


class ReservedBitsSet(InputError):
    pass


class DuplicateClassId(InputError):
    pass


class InvalidNodeToken(InputError):
    pass


class GlyphInvariantViolation(InputError):
    pass


class DuplicateGlyph(InputError):
    pass


class ConfigError(InputError):
    pass


class StageError(TactileHarError):
    """Wraps an error raised inside a pipeline stage with its location."""

    def __init__(self, stage, cause, sequence_id=None):
        self.stage = stage
        self.cause = cause
        self.sequence_id = sequence_id
        self.exit_code = getattr(cause, "exit_code", 2)
        where = f"sequence {sequence_id!r}, " if sequence_id is not None else ""
        super().__init__(f"[{where}stage {stage}] {type(cause).__name__}: {cause}")
