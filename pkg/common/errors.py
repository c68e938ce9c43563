# common/errors.py
from __future__ import annotations

from typing import Any, List, Optional

# Exit codes of the command-line surface
EXIT_OK = 0
EXIT_VERDICT = 2
EXIT_INPUT = 3


class NondegError(Exception):
    """Base of every error raised by the library; the CLI maps it to an exit code."""

    exit_code: int = EXIT_VERDICT

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": self.message, **self.details}


# -------- input errors (exit 3) ----------

class InputError(NondegError):
    exit_code = EXIT_INPUT


class ConfigError(InputError):
    pass


class CurveFileError(InputError):
    def __init__(self, message: str, diagnostics: Optional[List[str]] = None, **details: Any):
        super().__init__(message, diagnostics=list(diagnostics or []), **details)
        self.diagnostics = list(diagnostics or [])


class ArgumentError(InputError):
    pass


class DomainError(InputError):
    pass


class PreconditionError(InputError):
    pass


class SmoothnessError(InputError):
    pass


# -------- verdict errors (exit 2) ----------

class ChartEscapeError(NondegError):
    def __init__(self, message: str, exit_parameter: Optional[float] = None, **details: Any):
        super().__init__(message, exit_parameter=exit_parameter, **details)
        self.exit_parameter = exit_parameter


class DegeneracyError(NondegError):
    pass


class MismatchError(NondegError):
    pass


class JumpError(NondegError):
    def __init__(self, message: str, closeness: float, **details: Any):
        super().__init__(message, closeness=closeness, **details)
        self.closeness = closeness


class ConstructionError(NondegError):
    pass


class ScalingError(NondegError):
    pass


class ExhaustionError(NondegError):
    def __init__(self, message: str, profile: Optional[List[dict]] = None, **details: Any):
        super().__init__(message, profile=list(profile or []), **details)
        self.profile = list(profile or [])


class ResolutionError(NondegError):
    pass


class LiftError(NondegError):
    pass


class SmoothingError(NondegError):
    pass
