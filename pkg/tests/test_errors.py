from __future__ import annotations

import json
from io import StringIO
from pathlib import Path
from unittest.mock import Mock

import pytest
from rich.console import Console

from lbs_ads.errors import (
    BadCredential,
    ConfigError,
    DuplicateId,
    ErrorCategory,
    ErrorContext,
    ErrorHandler,
    ErrorSeverity,
    ErrorSuggestion,
    FileSystemError,
    LbsError,
    MalformedSnapshot,
    RouteError,
    exit_code_for,
)


def quiet_handler(audit_logger=None):
    buffer = StringIO()
    return ErrorHandler(console=Console(file=buffer, width=120), audit_logger=audit_logger), buffer


class TestLbsError:
    """Test LbsError functionality."""

    def test_code_is_class_name(self):
        error = DuplicateId("advertiser 'pizza-01' is already registered")
        assert error.code == "DuplicateId"
        assert str(error) == "DuplicateId: advertiser 'pizza-01' is already registered"

    def test_category_and_severity(self):
        assert BadCredential("x").category is ErrorCategory.SECURITY
        assert BadCredential("x").severity is ErrorSeverity.HIGH
        assert RouteError("x").severity is ErrorSeverity.LOW
        assert LbsError("x").category is ErrorCategory.UNKNOWN

    def test_error_id(self):
        error = ConfigError("ticks: must be >= 1")
        assert len(error.error_id) == 8

    def test_to_dict(self):
        error = MalformedSnapshot(
            "users[0]: unknown keys ['age']",
            context=ErrorContext(file_path=Path("db.json"), field_path="users[0]"),
            suggestions=[ErrorSuggestion("Fix", "remove the key")],
        )
        data = error.to_dict()
        assert data["code"] == "MalformedSnapshot"
        assert data["category"] == "parsing"
        assert data["context"]["file_path"] == "db.json"
        assert data["context"]["field_path"] == "users[0]"
        assert data["suggestions"][0]["title"] == "Fix"
        json.dumps(data)


class TestExitCodes:
    @pytest.mark.parametrize("error, code", [
        (FileSystemError("cannot read"), 2),
        (ConfigError("bad"), 1),
        (DuplicateId("dup"), 1),
        (RouteError("t"), 1),
    ])
    def test_mapping(self, error, code):
        assert exit_code_for(error) == code


class TestErrorHandler:
    """Test ErrorHandler functionality."""

    def test_handle_lbs_error(self):
        handler, buffer = quiet_handler()
        code = handler.handle_error(DuplicateId("advertiser 'pizza-01' is already registered"))
        assert code == 1
        assert "DuplicateId" in buffer.getvalue()
        assert len(handler.error_history) == 1

    def test_os_error_becomes_file_system_error(self):
        handler, buffer = quiet_handler()
        code = handler.handle_error(PermissionError("denied"), ErrorContext(command="run"))
        assert code == 2
        (recorded,) = handler.error_history
        assert isinstance(recorded, FileSystemError)
        assert recorded.context.command == "run"
        assert "Check File Path" in buffer.getvalue()

    def test_foreign_exception_wrapped(self):
        handler, _ = quiet_handler()
        assert handler.handle_error(ValueError("boom")) == 1
        assert handler.error_history[0].message == "ValueError: boom"

    def test_display_includes_location(self):
        handler, buffer = quiet_handler()
        handler.handle_error(ConfigError(
            "ticks: must be >= 1",
            context=ErrorContext(file_path=Path("scenario.json"), line_number=3, field_path="ticks"),
        ))
        output = buffer.getvalue()
        assert "scenario.json:3" in output
        assert "Field: ticks" in output

    def test_suggestions_for_routes(self):
        handler, buffer = quiet_handler()
        handler.handle_error(RouteError("waypoints[1].t: timestamps must be strictly increasing"))
        assert "lbs-ads validate --routes" in buffer.getvalue()

    def test_audit_logger_receives_errors(self):
        audit = Mock()
        handler, _ = quiet_handler(audit_logger=audit)
        handler.handle_error(BadCredential("secret does not match advertiser 'pizza-01'"))
        audit.log_error.assert_called_once()
        assert audit.log_error.call_args.args[0] == "BadCredential"

