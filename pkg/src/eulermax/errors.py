"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: parameter, construction and
numerical failures exit 3; anything else is an internal error (exit 4).
Usage errors (bad flags, malformed config) are raised by the CLI layer
itself and exit 2.
"""


class EulermaxError(Exception):
    """Base class for all package-specific failures."""


class ParameterError(EulermaxError):
    """An argument violates an operation's stated domain."""


class ConstructionError(EulermaxError):
    """A discretization, block or hypothesis construction cannot be met."""


class NumericalError(EulermaxError):
    """A numerical routine (factorization, quadrature) failed to converge."""
