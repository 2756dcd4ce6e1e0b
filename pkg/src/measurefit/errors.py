"""Exception hierarchy.

Two families matter to callers: input problems (bad expressions, configs,
grids) and numerical failures (non-integrable densities, solver breakdown,
fits with no admissible parameter).  The CLI maps them to exit codes 1 and 2.
"""


class MeasureFitError(Exception):
    """Base class for all package errors."""


class InputError(MeasureFitError, ValueError):
    """Malformed user input."""


class ExprError(InputError):
    """Expression could not be parsed or evaluated."""


class ExprSyntaxError(ExprError):
    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(expected)
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f" (expected {', '.join(self.expected)})"
        super().__init__(detail)


class UnknownFunctionError(ExprError):
    def __init__(self, name, offset):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown function {name!r} at offset {offset}")


class UnboundParameterError(ExprError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unbound parameter {name!r}")


class GridError(InputError):
    """Grids that do not match or cannot be used together."""


class ModelError(InputError):
    """An SDE model violates its invariants on the working grid."""


class ConfigError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class NumericalError(MeasureFitError, ArithmeticError):
    """A computation ran but its result cannot be trusted."""


class NonIntegrableError(NumericalError):
    """Stationary density does not normalize on the working domain."""


class SolverError(NumericalError):
    """Fokker-Planck time stepping failed a conservation or sign check."""


class FitError(NumericalError):
    """No admissible parameter in the search range."""
