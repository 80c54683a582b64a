"""Exception hierarchy shared by the solver, certificate engine and CLI."""


class InexactMDError(Exception):
    pass


class DomainError(InexactMDError, ValueError):
    """A point lies outside the domain where an operation is defined."""


class ArgumentError(InexactMDError, ValueError):
    pass


class UnsupportedError(InexactMDError):
    """The requested analysis is not available for this problem."""


class InfeasibleProblemError(InexactMDError):
    pass


class ConfigError(InexactMDError):
    pass
