"""Exception hierarchy shared by all modules.

The CLI maps each class to an exit code (see ``nlslab.cli``).
"""


class NlslabError(Exception):
    """Base class for all package errors."""


class ConfigError(NlslabError, ValueError):
    """Invalid configuration or violated operation precondition."""


class DomainError(NlslabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class NumericalError(NlslabError, ArithmeticError):
    """A numerical procedure failed to reach its accuracy target.

    ``diagnostics`` carries whatever the failing routine measured.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class PreconditionError(ConfigError):
    """A solver precondition failed; ``node`` names the first failing grid index."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class InfeasibleDataError(ConfigError):
    """Data fails the integrability test required by the linear problem."""


class InconsistencyError(NumericalError):
    """A converged iterate violates a bracket it must satisfy."""
