"""Exception hierarchy shared by the library and the command-line surface.

Every exception carries the process exit code the CLI maps it to.
"""


class CvqkdError(Exception):
    """Base class for all errors raised by this package"""

    exit_code = 1


class DomainError(CvqkdError, ValueError):
    """An input lies outside the domain of a formula"""

    exit_code = 3


class ConfigValidationError(CvqkdError, ValueError):
    """A configuration record could not be read or failed validation"""

    exit_code = 3

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class PreconditionError(CvqkdError):
    """A documented precondition of an operation does not hold"""

    exit_code = 3


class UsageError(CvqkdError):
    """Bad command line, unknown figure id or sweep variable"""

    exit_code = 2


class NumericalConsistencyError(CvqkdError, ArithmeticError):
    """A computed quantity violated an internal numerical guard"""

    exit_code = 4
