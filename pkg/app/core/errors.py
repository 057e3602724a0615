# app/core/errors.py
from typing import Any, Dict, Optional


class EngineError(Exception):
    """Base class for every error raised by the engine.

    ``code`` is a stable identifier used by the HTTP layer and the CLI.
    """

    code = "ENGINE_ERROR"

    def __init__(self, message: str, code: Optional[str] = None, **details: Any):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        payload = {"code": self.code, "message": self.message}
        if self.details:
            payload["details"] = {k: str(v) for k, v in self.details.items()}
        return payload


class QuiverError(EngineError):
    code = "INVALID_QUIVER"


class QuiverFileError(EngineError):
    code = "PARSE_ERROR"

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        if line is not None:
            message = f"line {line} column {column}: {message}"
        super().__init__(message, line=line, column=column)
        self.line = line
        self.column = column


class PotentialReductionError(EngineError):
    code = "UNSUPPORTED_PATTERN"


class CatalogueError(EngineError):
    code = "NOT_CATALOGUED"


class RankConstraintError(EngineError):
    code = "RANK_CONSTRAINT"


class FamilyError(EngineError):
    code = "NOT_IN_FAMILY"


class PoleError(EngineError):
    code = "POLE"


class InsufficientBoxError(EngineError):
    code = "INSUFFICIENT_BOX"


class DomainError(EngineError):
    code = "INSUFFICIENT_DOMAIN"


class SeriesError(EngineError):
    code = "SERIES"


class UsageError(EngineError):
    code = "USAGE"


# Errors the CLI reports as usage/configuration problems (exit status 2)
CONFIGURATION_ERRORS = (
    UsageError,
    QuiverFileError,
    QuiverError,
    RankConstraintError,
    CatalogueError,
    FamilyError,
)
