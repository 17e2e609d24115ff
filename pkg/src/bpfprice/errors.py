"""Exception hierarchy shared by the solvers, the harness and the CLI."""


class BpfError(Exception):
    """Base class for all library errors."""


class ConfigError(BpfError, ValueError):
    """Invalid run configuration.

    ``lineno`` is the 1-based line of the offending ``key = value`` entry when
    the error comes from parsing config text, else ``None``.
    """

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class NumericalInstabilityError(BpfError, ArithmeticError):
    """Non-finite values or loss of positivity beyond scheme noise."""


class InvariantViolationError(BpfError):
    """A hard invariant threshold was crossed (u^2 > h^2, negative mass)."""


class SupportGuardError(InvariantViolationError):
    """Trading activity came within one transaction cost of the boundary."""


class NoInterfaceError(BpfError, ValueError):
    """The imbalance u has no sign change, so no price can be read off."""


class NoTradesError(BpfError, ValueError):
    """The transaction density vanishes identically; the price is undefined."""


class FitError(BpfError, ValueError):
    """A requested fit is undefined on the given data."""
