# polyvocab/exceptions.py
"""
Exception hierarchy for polyvocab.

Every error raised by the library derives from :class:`PolyvocabError`, which
carries a machine-readable ``error_code``, the process exit code the CLI should
use, and an ``extra`` dict of context for structured reports.
"""

from typing import Any, Dict, Optional


class PolyvocabError(Exception):
    """
    Base polyvocab exception class.

    Attributes:
        detail (Any): Error message or details
        exit_code (int): Exit code used by the command-line interface
        error_code (str): Machine-readable error code
        extra (dict): Additional error context
    """

    def __init__(self, detail: Any = None, exit_code: int = 2,
                 error_code: Optional[str] = None, **kwargs):
        super().__init__(detail)
        self.detail = detail
        self.exit_code = exit_code
        self.error_code = error_code or f"ERR_{exit_code}"
        self.extra = kwargs

    def __str__(self) -> str:
        return str(self.detail)


class ScopSyntaxError(PolyvocabError):
    """
    Malformed SCoP document.

    Raised by the parser with the 1-based line and column of the offending token.
    """

    def __init__(self, detail: Any = None, line: int = 0, column: int = 0, **kwargs):
        super().__init__(detail or "Syntax error", 2, "SCOP_SYNTAX",
                         line=line, column=column, **kwargs)
        self.line = line
        self.column = column

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}: {self.detail}"


class ScopValidationError(PolyvocabError):
    """Well-formed document describing an inconsistent SCoP."""

    def __init__(self, detail: Any = None, **kwargs):
        super().__init__(detail or "Invalid SCoP", 2, "SCOP_INVALID", **kwargs)


class DimensionMismatchError(ScopValidationError):
    """Access or point dimension disagrees with the owning statement."""

    def __init__(self, detail: Any = None, **kwargs):
        super().__init__(detail or "Dimension mismatch", **kwargs)
        self.error_code = "DIMENSION_MISMATCH"


class IlpModelError(PolyvocabError):
    """Ill-formed ILP model (unbounded integer, duplicate or unknown variable)."""

    def __init__(self, detail: Any = None, **kwargs):
        super().__init__(detail or "Invalid ILP model", 2, "ILP_MODEL", **kwargs)


class InfeasibleError(PolyvocabError):
    """
    The system (or one of its objective levels) has no integer solution.

    ``level`` names the objective level that failed, or ``"base"``.
    """

    def __init__(self, detail: Any = None, level: str = "base", **kwargs):
        super().__init__(detail or "Infeasible system", 1, "ILP_INFEASIBLE",
                         level=level, **kwargs)
        self.level = level


class SolverContractError(PolyvocabError):
    """Internal solver contract violation, e.g. an unbounded objective."""

    def __init__(self, detail: Any = None, **kwargs):
        super().__init__(detail or "Solver contract violated", 2, "ILP_CONTRACT", **kwargs)


class SolverTimeout(PolyvocabError):
    """Time budget exhausted before any integer solution was found."""

    def __init__(self, detail: Any = None, **kwargs):
        super().__init__(detail or "Time budget exceeded", 3, "ILP_TIMEOUT", **kwargs)


class EnumerationLimitError(PolyvocabError):
    """Instance enumeration would exceed the configured cap."""

    def __init__(self, detail: Any = None, **kwargs):
        super().__init__(detail or "Enumeration cap exceeded", 2, "ENUM_LIMIT", **kwargs)


class RecipeError(PolyvocabError):
    """Unknown recipe selector or idiom identifier."""

    def __init__(self, detail: Any = None, **kwargs):
        super().__init__(detail or "Invalid recipe", 2, "RECIPE_INVALID", **kwargs)


class ConfigError(PolyvocabError):
    """Invalid machine file or run configuration."""

    def __init__(self, detail: Any = None, **kwargs):
        super().__init__(detail or "Invalid configuration", 2, "CONFIG_INVALID", **kwargs)


class LegalityViolation(PolyvocabError):
    """A produced schedule failed the instance-level legality oracle."""

    def __init__(self, detail: Any = None, **kwargs):
        super().__init__(detail or "Illegal schedule", 1, "ILLEGAL_SCHEDULE", **kwargs)


def error_payload(exc: PolyvocabError) -> Dict[str, Any]:
    """
    Format an exception as the ``{"error": {...}}`` document used by JSON output.

    Example:
        >>> error_payload(RecipeError("unknown idiom FOO"))["error"]["code"]
        'RECIPE_INVALID'
    """
    payload: Dict[str, Any] = {
        "error": {
            "code": exc.error_code,
            "message": str(exc),
            "exit_code": exc.exit_code,
        }
    }
    if exc.extra:
        payload["error"]["details"] = exc.extra
    return payload
