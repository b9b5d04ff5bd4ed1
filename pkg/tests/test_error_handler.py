import pytest

from error_handler import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_OK,
    ArityError,
    ConvergenceError,
    ErrorCategory,
    ErrorHandler,
    ErrorSeverity,
    GridFormatError,
    IncompatibleProblemError,
    InvalidParameterError,
    PathOutsideChartError,
    handle_command_error,
    last_error,
)


@pytest.mark.parametrize("error, category, code", [
    (InvalidParameterError("bad"), ErrorCategory.CONFIGURATION_ERROR, EXIT_CONFIG),
    (ArityError("expected 3 components", 4), ErrorCategory.PARSE_ERROR, EXIT_CONFIG),
    (ConvergenceError(10, 1.0), ErrorCategory.NUMERICAL_ERROR, EXIT_NUMERICAL),
    (PathOutsideChartError("outside"), ErrorCategory.DOMAIN_ERROR, EXIT_NUMERICAL),
    (GridFormatError("bad header"), ErrorCategory.IO_ERROR, EXIT_IO),
    (FileNotFoundError("gone"), ErrorCategory.IO_ERROR, EXIT_IO),
    (ValueError("matrix is singular"), ErrorCategory.NUMERICAL_ERROR, EXIT_NUMERICAL),
])
def test_categories_and_exit_codes(error, category, code):
    handler = ErrorHandler()
    info = handler.handle_error(error, "test")
    assert info.category is category
    assert info.exit_code == code


def test_severity_and_stats():
    handler = ErrorHandler()
    handler.handle_error(InvalidParameterError("one"), "a")
    handler.handle_error(RuntimeError("mystery"), "b")
    assert handler.determine_severity(ErrorCategory.UNKNOWN_ERROR) is ErrorSeverity.CRITICAL
    report = handler.get_error_report()
    assert report["error_statistics"]["total_errors"] == 2
    assert report["error_statistics"]["errors_by_category"] == {"config_error": 1, "unknown": 1}
    assert [e["command"] for e in report["recent_errors"]] == ["a", "b"]


def test_error_metadata():
    error = IncompatibleProblemError(0.25)
    assert error.defect == 0.25
    assert ErrorHandler().handle_error(error, "thermal").metadata == {"defect": 0.25}
    assert ArityError("expected 3 components", 7).position == 7


def test_command_decorator(capsys):
    @handle_command_error("demo")
    def fails():
        raise ConvergenceError(3, 0.5)

    @handle_command_error("demo")
    def succeeds():
        return None

    assert fails() == EXIT_NUMERICAL
    assert "❌ demo" in capsys.readouterr().err
    assert last_error().command == "demo"
    assert succeeds() == EXIT_OK
