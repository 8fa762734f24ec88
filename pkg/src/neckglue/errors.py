"""Exception taxonomy shared by the library and the CLI.

Parameter/contract problems map to CLI exit code 2, solver failures to 1.
"""


class NeckglueError(Exception):
    """Base class for all library errors."""


class ParameterError(NeckglueError, ValueError):
    """An argument violates a documented admissibility condition."""


class SingularPointError(ParameterError):
    """Evaluation was requested at the puncture x = 0."""


class ContractViolationError(NeckglueError, ValueError):
    """Mode data carries coefficients outside the operator's domain."""


class SolverError(NeckglueError, RuntimeError):
    """A numerical procedure failed to produce a usable result."""


class IntegrationError(SolverError):
    """ODE integration or event detection failed within its horizon."""


class DivergenceError(SolverError):
    """A fixed-point iteration failed to converge.

    Carries the iterate history so callers can report it.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class DomainViolationError(SolverError):
    """An iterate or a registered callback left its admissible set."""


class AccuracyError(SolverError):
    """A quadrature or truncation failed its accuracy gate."""
