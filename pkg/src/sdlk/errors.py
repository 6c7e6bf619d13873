"""Exception types raised across the package."""


class SdlkError(ValueError):
    """Base class for all errors raised by :mod:`sdlk`."""


class DimensionMismatch(SdlkError):
    pass


class ShapeMismatch(SdlkError):
    pass


class EmptyDomain(SdlkError):
    pass


class NonFiniteEntry(SdlkError):
    pass


class ZeroCount(SdlkError):
    pass


class SingularPoint(SdlkError):
    """Matrix is not invertible to the eigenvalue floor."""


class StepTooLarge(SdlkError):
    """A retraction left the SPD cone numerically."""


class NonFiniteObjective(SdlkError):
    pass


class RankDeficiency(SdlkError):
    """Fewer usable generalized eigenpairs than requested dimensions."""


class DegenerateData(SdlkError):
    pass


class UnlabeledSource(SdlkError):
    pass


class AnchorDimensionMismatch(DimensionMismatch):
    pass


class EmptyTrainingSet(SdlkError):
    pass


class ParseError(SdlkError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class InconsistentWidth(ParseError):
    pass


class StageError(SdlkError):
    """Wraps an error raised inside one stage of an experiment run."""

    def __init__(self, stage, trial, cause):
        super().__init__(f"stage '{stage}' failed in trial {trial}: {cause}")
        self.stage = stage
        self.trial = trial
        self.cause = cause
