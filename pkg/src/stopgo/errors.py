class StopGoError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(StopGoError, ValueError):
    """Inputs are inconsistent: bad measure, payoff not expressible on the tree, bad config field."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class ResourceError(StopGoError, RuntimeError):
    """Requested instance exceeds a size cap."""


class InfeasibleEmbedding(StopGoError):
    """The target law cannot be embedded within the tree horizon.

    ``certificate`` holds a :class:`stopgo.primal.InfeasibilityCertificate`
    when one was computed.
    """

    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class DualityGapError(StopGoError):
    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ExactSolveError(StopGoError, RuntimeError):
    """The floating basis could not be certified in exact arithmetic."""
