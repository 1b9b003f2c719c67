"""Exception hierarchy shared by every raltsim module."""


class RaltsimError(Exception):
    """Base class for all raltsim errors."""


class DomainError(RaltsimError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(RaltsimError, ValueError):
    """A configuration object violates one of its invariants."""


class ContractError(RaltsimError, ValueError):
    """Caller broke a precondition (shape, length, pairing)."""


class OutOfTableError(DomainError):
    """Altitude lies below the first row of the accuracy table."""


class ValidationError(RaltsimError, ValueError):
    """A certification artifact failed validation.

    ``problems`` holds one human-readable line per failed check so callers
    (and the CLI) can name every offending row at once.
    """

    def __init__(self, message, problems=()):
        super().__init__(message)
        self.problems = tuple(problems)
