"""Exception types shared across the library."""


class InvalidArgumentError(ValueError):
    """Raised when an operation receives arguments outside its contract."""


class NumericFailure(RuntimeError):
    """Raised when an iterative routine diverges or fails to make progress.

    Carries the partial solve trace (if any) so callers can inspect what
    happened before the failure.
    """

    def __init__(self, message, trace=None, iterations=None):
        super().__init__(message)
        self.trace = trace
        self.iterations = iterations


class ConfigError(ValueError):
    """Raised on malformed experiment config files.

    Attributes name the offending key and line number so the CLI can print
    an actionable message.
    """

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line
