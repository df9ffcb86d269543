class EquistatError(Exception):
    """Base class for library errors."""


class InputError(EquistatError, ValueError):
    """Malformed or invariant-violating input (CLI exit code 2)."""


class DomainError(InputError):
    """The price grid is not closed under meet and join."""


class Inconclusive(EquistatError):
    """A solver ran out of budget without certifying anything (exit code 3)."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
