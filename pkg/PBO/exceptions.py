"""
Exceptions

Exception hierarchy shared by every module of the probabilistic binary
optimization package. The CLI maps these onto process exit codes.
"""

from typing import Any, Optional


class PBOException(Exception): pass
class ConfigException(PBOException): pass
class InfeasibleConstraintException(PBOException): pass
class DomainException(PBOException): pass
class EnumerationCapException(PBOException): pass
class OverflowException(PBOException): pass


class ObjectiveEvaluationException(PBOException):
    """Raised when the black-box objective cannot produce a value.

    When raised from inside an optimization run, ``partial_trace`` carries the
    trace recorded up to the failing iteration.
    """

    def __init__(self, message: str, partial_trace: Optional[Any] = None) -> None:
        super().__init__(message)
        self.partial_trace = partial_trace


class BridgeProtocolException(ObjectiveEvaluationException):
    """A line from the external objective process did not match the protocol."""

    def __init__(self, message: str, line: Optional[str] = None) -> None:
        super().__init__(f"{message}: {line!r}" if line is not None else message)
        self.line = line


class BridgeProcessException(ObjectiveEvaluationException): pass
class NonFiniteValueException(ObjectiveEvaluationException): pass


# Exit codes of the command-line front end
EXIT_SUCCESS = 0
EXIT_CONFIG_ERROR = 2
EXIT_INFEASIBLE = 3
EXIT_OBJECTIVE_FAILURE = 4


def exit_code_for(error: BaseException) -> int:
    """Map an exception onto the documented CLI exit code."""
    if isinstance(error, ConfigException):
        return EXIT_CONFIG_ERROR
    if isinstance(error, InfeasibleConstraintException):
        return EXIT_INFEASIBLE
    if isinstance(error, ObjectiveEvaluationException):
        return EXIT_OBJECTIVE_FAILURE
    return 1
