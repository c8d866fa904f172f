"""Exception types raised across the package."""


class TauIndepError(ValueError):
    """Base class for all package errors."""


class DomainError(TauIndepError):
    """A numeric argument lies outside the domain of the operation."""


class PreconditionError(TauIndepError):
    """The data does not satisfy an operation's precondition."""


class DegenerateError(TauIndepError):
    """The configuration makes the statistic or its null variance degenerate."""


class UnsupportedConfigurationError(TauIndepError):
    """The requested combination of options has no supported null moments."""


class InputError(TauIndepError):
    """Malformed input file or configuration."""
