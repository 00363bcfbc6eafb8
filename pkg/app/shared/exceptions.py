"""
Custom exception classes and error handlers
Reference: https://fastapi.tiangolo.com/tutorial/handling-errors/
"""

from typing import Optional

import structlog
from fastapi import Request, status
from fastapi.responses import JSONResponse

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class BaseAppException(Exception):
    """
    Base exception class for application-specific errors.

    ``status_code`` is used by the node API, ``exit_code`` by the CLI.

    Single Responsibility: Common exception interface
    """

    def __init__(
        self,
        message: str,
        status_code: int = 500,
        exit_code: int = EXIT_FAILURE,
    ):
        self.message = message
        self.status_code = status_code
        self.exit_code = exit_code
        super().__init__(self.message)


class ConfigurationError(BaseAppException):
    """
    Exception for invalid contract or experiment configuration.

    Single Responsibility: Configuration error representation
    """

    def __init__(self, message: str = "Invalid configuration"):
        super().__init__(message, status.HTTP_400_BAD_REQUEST, EXIT_USAGE)


class ValidationError(BaseAppException):
    """
    Exception for invalid poses, digests, robot ids and malformed payloads.

    Single Responsibility: Validation error representation
    """

    def __init__(self, message: str = "Validation failed"):
        super().__init__(message, status.HTTP_400_BAD_REQUEST)


class AuthorizationError(BaseAppException):
    """
    Exception for callers acting outside their role.

    Single Responsibility: Authorization error representation
    """

    def __init__(self, message: str = "Insufficient permissions"):
        super().__init__(message, status.HTTP_403_FORBIDDEN)


class NotFoundError(BaseAppException):
    """
    Exception for unknown sets, robots and stored images.

    Single Responsibility: Not found error representation
    """

    def __init__(self, message: str = "Resource not found"):
        super().__init__(message, status.HTTP_404_NOT_FOUND)


class DuplicateSubmissionError(BaseAppException):
    """
    Exception for a digest or comparison edge submitted twice.

    Single Responsibility: Duplicate submission representation
    """

    def __init__(self, message: str = "Duplicate submission"):
        super().__init__(message, status.HTTP_409_CONFLICT)


class OrderingError(BaseAppException):
    """
    Exception for transactions applied out of sequence.

    Single Responsibility: Ledger ordering error representation
    """

    def __init__(self, message: str = "Transaction out of order"):
        super().__init__(message, status.HTTP_409_CONFLICT)


class ReplayError(BaseAppException):
    """
    Exception for a corrupt ledger entry; ``index`` is the entry position.
    """

    def __init__(self, message: str = "Ledger replay failed", index: Optional[int] = None):
        self.index = index
        if index is not None:
            message = f"entry {index}: {message}"
        super().__init__(message, status.HTTP_422_UNPROCESSABLE_ENTITY)


class StalePoseError(BaseAppException):
    """Exception for an image with no pose sample close enough in time."""

    def __init__(self, message: str = "No fresh pose for image"):
        super().__init__(message, status.HTTP_422_UNPROCESSABLE_ENTITY)


# Error handlers
async def app_exception_handler(request: Request, exc: BaseAppException):
    """
    Handler for application-specific exceptions raised behind the node API.

    Single Responsibility: Application exception handling
    """
    logger.warning(
        "request_rejected",
        path=request.url.path,
        error=type(exc).__name__,
        detail=exc.message,
    )
    return JSONResponse(
        status_code=exc.status_code,
        content={"detail": exc.message, "type": type(exc).__name__},
    )
