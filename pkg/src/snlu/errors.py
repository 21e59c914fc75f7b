"""Exception types shared across the engine."""


class SnluError(Exception):
    pass


class EmptyQuery(SnluError):
    """Query is empty, too long, or has no tokens after normalization."""


class ParseError(SnluError):
    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class TaxonomyError(SnluError):
    pass


class OverlapError(SnluError):
    pass


class DivergenceError(SnluError):
    """Training loss became non-finite."""


class VersionError(SnluError):
    pass


class CorruptFileError(SnluError):
    pass


class LengthMismatch(SnluError):
    pass


class InsufficientSamples(SnluError):
    pass
