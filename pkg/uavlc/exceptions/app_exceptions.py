from typing import Any, Optional

from fastapi import status

EXIT_INFEASIBLE = 2
EXIT_SOLVER_FAILURE = 3


class AppException(Exception):
    """Base exception with message, HTTP status code and CLI exit code."""
    def __init__(
        self,
        message: str,
        status_code: int = status.HTTP_400_BAD_REQUEST,
        exit_code: int = EXIT_INFEASIBLE,
    ):
        self.message = message
        self.status_code = status_code
        self.exit_code = exit_code
        super().__init__(message)


class SchemaException(AppException):
    """Raised when a scenario document does not parse; message carries the field path."""
    def __init__(self, message: str = "Invalid scenario document"):
        super().__init__(message, status.HTTP_422_UNPROCESSABLE_ENTITY)


class ValidationException(AppException):
    """Raised when a scenario or association invariant is violated."""
    def __init__(self, message: str = "Invalid input data"):
        super().__init__(message, status.HTTP_422_UNPROCESSABLE_ENTITY)


class DomainException(AppException):
    """Raised for arguments outside a function's mathematical domain."""
    def __init__(self, message: str = "Argument outside domain"):
        super().__init__(message, status.HTTP_422_UNPROCESSABLE_ENTITY)


class DegenerateGeometryException(AppException):
    """Raised when a transmitter and a receiver coincide."""
    def __init__(self, message: str = "Zero-length link"):
        super().__init__(message, status.HTTP_422_UNPROCESSABLE_ENTITY)


class InfeasibleChannelException(AppException):
    """Raised when a served user has zero aggregate gain to its UAV."""
    def __init__(self, message: str = "Served user has zero channel gain"):
        super().__init__(message, status.HTTP_422_UNPROCESSABLE_ENTITY)


class NoCoverageException(AppException):
    """Raised when a user has zero gain to every UAV."""
    def __init__(self, message: str = "User not covered by any UAV"):
        super().__init__(message, status.HTTP_422_UNPROCESSABLE_ENTITY)


class EmptyRisSetException(AppException):
    """Raised when an SDP is requested for a UAV without associated RISs."""
    def __init__(self, message: str = "UAV has no associated RIS"):
        super().__init__(message, status.HTTP_422_UNPROCESSABLE_ENTITY)


class ZeroPathLossException(AppException):
    """Raised when a linearization coefficient is requested for a dead U-R link."""
    def __init__(self, message: str = "UAV-RIS path loss is zero"):
        super().__init__(message, status.HTTP_422_UNPROCESSABLE_ENTITY)


class InfeasibleSubproblemException(AppException):
    """Raised when a convex subproblem start point violates a constraint."""
    def __init__(self, message: str = "Subproblem start is infeasible", constraint: Optional[str] = None):
        self.constraint = constraint
        super().__init__(message, status.HTTP_422_UNPROCESSABLE_ENTITY)


class TooLargeException(AppException):
    """Raised when an oracle search space exceeds its cap."""
    def __init__(self, message: str = "Search space too large"):
        super().__init__(message, status.HTTP_422_UNPROCESSABLE_ENTITY)


class SolverFailureException(AppException):
    """
    Raised when an interior-point or barrier solve does not converge.

    `trace` holds per-iteration diagnostics, `best` the best iterate seen and
    `solution` the last accepted Solution when raised out of a run.
    """
    def __init__(
        self,
        message: str = "Solver failed to converge",
        trace: Optional[list] = None,
        best: Any = None,
    ):
        self.trace = trace or []
        self.best = best
        self.solution = None
        super().__init__(
            message,
            status.HTTP_500_INTERNAL_SERVER_ERROR,
            EXIT_SOLVER_FAILURE,
        )
