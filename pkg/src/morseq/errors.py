"""Exception hierarchy shared by every morseq module."""


class MorseqError(Exception):
    """Base class for all errors raised by morseq."""


class DimensionMismatch(MorseqError):
    pass


class CompositionNonzero(MorseqError):
    """Raised when a pair of matrices that should compose to zero does not."""


class NotAComplex(MorseqError):
    pass


class NotAChainMap(MorseqError):
    pass


class NotAnInvolution(MorseqError):
    pass


class NotClosedUnderDifferential(MorseqError):
    pass


class GradingMismatch(MorseqError):
    pass


class InvalidInstance(MorseqError):
    def __init__(self, message, problems=()):
        super().__init__(message)
        self.problems = list(problems)


class ValidationError(InvalidInstance):
    pass


class ParseError(MorseqError):
    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.field = field


class UnknownName(MorseqError):
    pass


class UnknownGenerator(MorseqError):
    pass


class MalformedChain(MorseqError):
    pass


class NonConvergence(MorseqError):
    pass


class Mismatch(MorseqError):
    def __init__(self, message, diff=()):
        super().__init__(message)
        self.diff = list(diff)
