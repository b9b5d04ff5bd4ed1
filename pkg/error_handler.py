"""
Error Handler: Centralized error handling for weylsheet
Provides the exception taxonomy, consistent logging, and CLI exit codes
"""

import logging
import sys
import time
from collections import Counter
from typing import Any, Callable, Dict, List, Optional
from enum import Enum
from dataclasses import dataclass, field
from functools import wraps


# Error severity levels
class ErrorSeverity(Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


# Error categories
class ErrorCategory(Enum):
    CONFIGURATION_ERROR = "config_error"
    PARSE_ERROR = "parse_error"
    NUMERICAL_ERROR = "numerical_error"
    DOMAIN_ERROR = "domain_error"
    IO_ERROR = "io_error"
    UNKNOWN_ERROR = "unknown"


# Exit codes of the command-line tool
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_EXIT_CODES = {
    ErrorCategory.CONFIGURATION_ERROR: EXIT_CONFIG,
    ErrorCategory.PARSE_ERROR: EXIT_CONFIG,
    ErrorCategory.NUMERICAL_ERROR: EXIT_NUMERICAL,
    ErrorCategory.DOMAIN_ERROR: EXIT_NUMERICAL,
    ErrorCategory.IO_ERROR: EXIT_IO,
    ErrorCategory.UNKNOWN_ERROR: EXIT_NUMERICAL,
}


# ============================================
# Exception hierarchy
# ============================================

class WeylsheetError(Exception):
    """Base class of every error raised by weylsheet."""

    category = ErrorCategory.UNKNOWN_ERROR

    def __init__(self, message: str, **metadata):
        super().__init__(message)
        self.metadata = metadata


class ConfigError(WeylsheetError):
    category = ErrorCategory.CONFIGURATION_ERROR


class InvalidParameterError(ConfigError):
    pass


class SurfaceSyntaxError(WeylsheetError):
    category = ErrorCategory.PARSE_ERROR

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}", position=position)
        self.position = position


class UnknownIdentifierError(SurfaceSyntaxError):
    pass


class ArityError(SurfaceSyntaxError):
    pass


class GridFormatError(WeylsheetError):
    category = ErrorCategory.IO_ERROR


class ShapeMismatchError(GridFormatError):
    pass


class DomainViolationError(WeylsheetError):
    category = ErrorCategory.DOMAIN_ERROR


class PathOutsideChartError(DomainViolationError):
    pass


class NegativeTemperatureError(DomainViolationError):
    pass


class ThermalProfileError(DomainViolationError):
    pass


class NonFiniteError(WeylsheetError):
    category = ErrorCategory.NUMERICAL_ERROR


class DegenerateChartError(WeylsheetError):
    category = ErrorCategory.NUMERICAL_ERROR


class NonSpacelikeError(DegenerateChartError):
    pass


class SingularMetricError(WeylsheetError):
    category = ErrorCategory.NUMERICAL_ERROR


class DegenerateSecondFormError(WeylsheetError):
    category = ErrorCategory.NUMERICAL_ERROR


class DevelopableSurfaceError(DegenerateSecondFormError):
    pass


class IncompatibleProblemError(WeylsheetError):
    category = ErrorCategory.NUMERICAL_ERROR

    def __init__(self, defect: float):
        super().__init__(
            f"periodic problem is incompatible: integral of (r/2 - K) dA = {defect:.17g}",
            defect=defect,
        )
        self.defect = defect


class ConvergenceError(WeylsheetError):
    category = ErrorCategory.NUMERICAL_ERROR

    def __init__(self, iterations: int, residual: float):
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual:.3e})",
            iterations=iterations, residual=residual,
        )
        self.iterations = iterations
        self.residual = residual


class IndeterminateFrameError(WeylsheetError):
    category = ErrorCategory.NUMERICAL_ERROR


class NonUnitFieldError(WeylsheetError):
    category = ErrorCategory.NUMERICAL_ERROR


@dataclass
class ErrorInfo:
    error_id: str
    category: ErrorCategory
    severity: ErrorSeverity
    message: str
    timestamp: float
    command: str
    exit_code: int
    metadata: Dict[str, Any] = field(default_factory=dict)


_SEVERITY = {
    ErrorCategory.UNKNOWN_ERROR: ErrorSeverity.CRITICAL,
    ErrorCategory.NUMERICAL_ERROR: ErrorSeverity.HIGH,
    ErrorCategory.IO_ERROR: ErrorSeverity.HIGH,
    ErrorCategory.DOMAIN_ERROR: ErrorSeverity.MEDIUM,
    ErrorCategory.CONFIGURATION_ERROR: ErrorSeverity.MEDIUM,
    ErrorCategory.PARSE_ERROR: ErrorSeverity.MEDIUM,
}

_LOG_LEVELS = {
    ErrorSeverity.CRITICAL: logging.CRITICAL,
    ErrorSeverity.HIGH: logging.ERROR,
    ErrorSeverity.MEDIUM: logging.WARNING,
    ErrorSeverity.LOW: logging.INFO,
}

# Message keywords for exceptions raised outside weylsheet (numpy, scipy, json)
_KEYWORDS = (
    (ErrorCategory.CONFIGURATION_ERROR, ("config", "setting", "parameter", "missing")),
    (ErrorCategory.PARSE_ERROR, ("parse", "syntax", "token")),
    (ErrorCategory.NUMERICAL_ERROR, ("singular", "converge", "nan", "overflow", "divide")),
    (ErrorCategory.IO_ERROR, ("file", "directory", "disk")),
)


class ErrorHandler:
    """
    Centralized error handling for the weylsheet commands.

    Features:
    - Error categorization (exception class first, message keywords second)
    - Severity-aware logging
    - Exit-code mapping for the command line
    """

    def __init__(self, log_level=logging.INFO):
        self.error_log: List[ErrorInfo] = []
        self.by_category: Counter = Counter()
        self.by_severity: Counter = Counter()
        self.by_command: Counter = Counter()

        self.logger = logging.getLogger("weylsheet.errors")
        self.logger.setLevel(log_level)

    def categorize_error(self, error: Exception) -> ErrorCategory:
        if isinstance(error, WeylsheetError):
            return error.category
        if isinstance(error, OSError):
            return ErrorCategory.IO_ERROR

        text = str(error).lower()
        for category, keywords in _KEYWORDS:
            if any(word in text for word in keywords):
                return category
        return ErrorCategory.UNKNOWN_ERROR

    def determine_severity(self, category: ErrorCategory) -> ErrorSeverity:
        return _SEVERITY.get(category, ErrorSeverity.LOW)

    def exit_code(self, category: ErrorCategory) -> int:
        return _EXIT_CODES[category]

    def handle_error(self, error: Exception, command: str,
                     metadata: Dict[str, Any] = None) -> ErrorInfo:
        """Categorize, log and record one failed command."""
        category = self.categorize_error(error)
        severity = self.determine_severity(category)

        merged = dict(getattr(error, "metadata", {}) or {})
        merged.update(metadata or {})
        now = time.time()

        info = ErrorInfo(
            error_id=f"{command}-{len(self.error_log) + 1:04d}",
            category=category,
            severity=severity,
            message=str(error),
            timestamp=now,
            command=command,
            exit_code=self.exit_code(category),
            metadata=merged,
        )

        self.logger.log(_LOG_LEVELS[severity],
                        f"[{info.error_id}] {type(error).__name__} ({category.value}, exit {info.exit_code}): "
                        f"{info.message}")
        self.by_category[category.value] += 1
        self.by_severity[severity.value] += 1
        self.by_command[command] += 1
        self.error_log.append(info)
        return info

    @property
    def error_stats(self) -> Dict[str, Any]:
        return {
            "total_errors": len(self.error_log),
            "errors_by_category": dict(self.by_category),
            "errors_by_severity": dict(self.by_severity),
            "errors_by_command": dict(self.by_command),
        }

    def get_error_report(self, recent: int = 10) -> Dict[str, Any]:
        """Statistics plus the last few failures, messages cut to 100 characters."""
        def brief(message: str) -> str:
            return message if len(message) <= 100 else message[:100] + "..."

        return {
            "error_statistics": self.error_stats,
            "recent_errors": [
                {"error_id": e.error_id, "command": e.command, "category": e.category.value,
                 "severity": e.severity.value, "exit_code": e.exit_code, "message": brief(e.message)}
                for e in self.error_log[-recent:]
            ],
        }


# Global error handler instance
error_handler = ErrorHandler()


def handle_command_error(command: str) -> Callable:
    """Decorator turning a command's exceptions into an exit code.

    The wrapped function returns an int exit code; on failure the error is
    logged, printed to stderr and mapped through ErrorHandler.exit_code.
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs) -> int:
            try:
                result = func(*args, **kwargs)
                return EXIT_OK if result is None else result
            except Exception as e:
                error_info = error_handler.handle_error(e, command)
                print(f"❌ {command}: {error_info.message}", file=sys.stderr)
                return error_info.exit_code
        return wrapper
    return decorator


def last_error() -> Optional[ErrorInfo]:
    return error_handler.error_log[-1] if error_handler.error_log else None
