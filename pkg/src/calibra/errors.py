"""Exception hierarchy shared by all calibra modules.

Input-validation failures map to CLI exit code 1, I/O failures to 2,
anything else to 3.
"""


class CalibraError(Exception):
    """Base class for all calibra errors."""

    exit_code = 3


class ValidationError(CalibraError):
    """A caller-supplied value violates a documented precondition."""

    exit_code = 1


class EmptyDataset(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InvalidProbability(ValidationError):
    pass


class LabelOutOfRange(ValidationError):
    pass


class ValueOutOfDomain(ValidationError):
    pass


class InvalidBinCount(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class NonPositiveAlpha(ValidationError):
    pass


class UnknownVariationMetric(ValidationError):
    pass


class ParseError(ValidationError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingSeries(ValidationError):
    pass
