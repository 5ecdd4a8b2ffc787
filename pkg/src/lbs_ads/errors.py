from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from rich.console import Console
from rich.panel import Panel
from rich.text import Text


class ErrorSeverity(Enum):
    """Error severity levels."""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class ErrorCategory(Enum):
    """Error categories for better organization."""
    CONFIGURATION = "configuration"
    FILE_SYSTEM = "file_system"
    PARSING = "parsing"
    VALIDATION = "validation"
    REGISTRY = "registry"
    SECURITY = "security"
    PROTOCOL = "protocol"
    UNKNOWN = "unknown"


@dataclass
class ErrorContext:
    """Context information for errors."""
    command: Optional[str] = None
    file_path: Optional[Path] = None
    line_number: Optional[int] = None
    field_path: Optional[str] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for serialization."""
        return {
            "command": self.command,
            "file_path": str(self.file_path) if self.file_path else None,
            "line_number": self.line_number,
            "field_path": self.field_path,
            "details": dict(self.details),
        }


@dataclass
class ErrorSuggestion:
    """Represents a suggestion for fixing an error."""
    title: str
    description: str
    command: Optional[str] = None
    priority: int = 1  # Lower numbers = higher priority


class LbsError(Exception):
    """Base exception class for lbs-ads errors."""

    category = ErrorCategory.UNKNOWN
    severity = ErrorSeverity.MEDIUM

    def __init__(
        self,
        message: str,
        context: Optional[ErrorContext] = None,
        suggestions: Optional[List[ErrorSuggestion]] = None,
        cause: Optional[Exception] = None,
    ):
        super().__init__(message)
        self.message = message
        self.context = context or ErrorContext()
        self.suggestions = suggestions or []
        self.cause = cause
        self.timestamp = datetime.now()
        self.error_id = self._generate_error_id()

    @property
    def code(self) -> str:
        """Stable error name shown to users and matched by scripts."""
        return type(self).__name__

    def _generate_error_id(self) -> str:
        content = f"{self.category.value}_{self.message}_{self.timestamp.isoformat()}"
        return hashlib.md5(content.encode()).hexdigest()[:8]

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"

    def to_dict(self) -> Dict[str, Any]:
        """Convert error to dictionary for logging/reporting."""
        return {
            "error_id": self.error_id,
            "code": self.code,
            "message": self.message,
            "category": self.category.value,
            "severity": self.severity.value,
            "timestamp": self.timestamp.isoformat(),
            "context": self.context.to_dict(),
            "suggestions": [
                {
                    "title": s.title,
                    "description": s.description,
                    "command": s.command,
                    "priority": s.priority,
                }
                for s in self.suggestions
            ],
            "cause": str(self.cause) if self.cause else None,
        }


class ConfigError(LbsError):
    """Scenario configuration is missing, malformed or inconsistent."""
    category = ErrorCategory.CONFIGURATION
    severity = ErrorSeverity.HIGH


class FileSystemError(LbsError):
    """Reading or writing a file failed."""
    category = ErrorCategory.FILE_SYSTEM


class MalformedSnapshot(LbsError):
    """A registry snapshot could not be parsed."""
    category = ErrorCategory.PARSING


class RouteError(LbsError):
    """A route file violates the route schema."""
    category = ErrorCategory.PARSING
    severity = ErrorSeverity.LOW


class InvalidRecord(LbsError):
    """A value violates a field invariant (geometry, MSISDN, limits)."""
    category = ErrorCategory.VALIDATION
    severity = ErrorSeverity.LOW


class NotAnEnterEvent(LbsError):
    category = ErrorCategory.VALIDATION
    severity = ErrorSeverity.LOW


class DuplicateId(LbsError):
    category = ErrorCategory.REGISTRY
    severity = ErrorSeverity.LOW


class UnknownId(LbsError):
    category = ErrorCategory.REGISTRY
    severity = ErrorSeverity.LOW


class EmptySubscription(LbsError):
    category = ErrorCategory.REGISTRY
    severity = ErrorSeverity.LOW


class BadCredential(LbsError):
    """The supplied advertiser secret does not match."""
    category = ErrorCategory.SECURITY
    severity = ErrorSeverity.HIGH


class UnknownUser(LbsError):
    category = ErrorCategory.PROTOCOL


class UnknownClient(LbsError):
    category = ErrorCategory.PROTOCOL


class AgreementMissing(LbsError):
    """The LCS client has no agreement with the operator."""
    category = ErrorCategory.PROTOCOL
    severity = ErrorSeverity.HIGH


class EmptyNetwork(LbsError):
    category = ErrorCategory.PROTOCOL


def exit_code_for(error: BaseException) -> int:
    """Process exit code for an error: 2 for I/O failures, 1 otherwise."""
    if isinstance(error, FileSystemError):
        return 2
    return 1


class ErrorHandler:
    """Central error handler for lbs-ads."""

    def __init__(self, console: Optional[Console] = None, audit_logger=None):
        self.console = console or Console(stderr=True)
        self.audit_logger = audit_logger
        self.logger = logging.getLogger("lbs_ads.errors")
        self.error_history: List[LbsError] = []

    def handle_error(
        self,
        error: Union[Exception, LbsError],
        context: Optional[ErrorContext] = None,
    ) -> int:
        """Record, log and display an error; return the exit code it maps to."""
        if not isinstance(error, LbsError):
            lbs_error = self._convert_exception(error, context)
        else:
            lbs_error = error
            if context:
                lbs_error.context = context

        if not lbs_error.suggestions:
            lbs_error.suggestions = self._generate_suggestions(lbs_error)

        self.error_history.append(lbs_error)
        self._log_error(lbs_error)
        self._display_error(lbs_error)
        return exit_code_for(lbs_error)

    def _convert_exception(self, error: Exception, context: Optional[ErrorContext] = None) -> LbsError:
        """Wrap a foreign exception, treating OS errors as file-system errors."""
        if isinstance(error, OSError):
            return FileSystemError(f"{type(error).__name__}: {error}", context=context, cause=error)
        return LbsError(f"{type(error).__name__}: {error}", context=context, cause=error)

    def _generate_suggestions(self, error: LbsError) -> List[ErrorSuggestion]:
        suggestions: List[ErrorSuggestion] = []
        if isinstance(error, MalformedSnapshot):
            suggestions.append(ErrorSuggestion(
                title="Check Snapshot",
                description="The snapshot must be one JSON document with 'users' and 'advertisements' lists",
            ))
        elif isinstance(error, RouteError):
            suggestions.append(ErrorSuggestion(
                title="Validate Routes",
                description="Run the route schema check to list every problem",
                command="lbs-ads validate --routes <path>",
            ))
        elif isinstance(error, ConfigError):
            suggestions.append(ErrorSuggestion(
                title="Check Configuration",
                description="Verify the scenario file; unknown keys are rejected",
            ))
        elif isinstance(error, BadCredential):
            suggestions.append(ErrorSuggestion(
                title="Use The Advertiser Secret",
                description="Only the advertiser holding the registered secret can change the record",
            ))
        elif isinstance(error, FileSystemError):
            suggestions.append(ErrorSuggestion(
                title="Check File Path",
                description="Verify the path exists and is readable/writable",
            ))
        return suggestions

    def _log_error(self, error: LbsError) -> None:
        self.logger.error(
            f"[{error.error_id}] {error.category.value}: {error}",
            extra={"error_data": error.to_dict()},
        )
        if self.audit_logger:
            self.audit_logger.log_error(
                error.code,
                error.message,
                details={"error_id": error.error_id, "severity": error.severity.value},
            )

    def _display_error(self, error: LbsError) -> None:
        severity_colors = {
            ErrorSeverity.LOW: "yellow",
            ErrorSeverity.MEDIUM: "orange3",
            ErrorSeverity.HIGH: "red",
            ErrorSeverity.CRITICAL: "bright_red",
        }
        color = severity_colors.get(error.severity, "red")

        error_text = Text()
        error_text.append(f"{error.code}: ", style="bold")
        error_text.append(error.message, style=color)
        if error.context.command:
            error_text.append(f"\nCommand: {error.context.command}", style="dim")
        if error.context.file_path:
            location = str(error.context.file_path)
            if error.context.line_number:
                location += f":{error.context.line_number}"
            error_text.append(f"\nFile: {location}", style="dim")
        if error.context.field_path:
            error_text.append(f"\nField: {error.context.field_path}", style="dim")

        self.console.print(Panel(
            error_text,
            title=f"{error.category.value.replace('_', ' ').title()} Error",
            border_style=color,
            expand=False,
        ))

        for i, suggestion in enumerate(sorted(error.suggestions, key=lambda s: s.priority), 1):
            self.console.print(f"{i}. [bold]{suggestion.title}[/bold]: {suggestion.description}")
            if suggestion.command:
                self.console.print(f"   Command: [green]{suggestion.command}[/green]")


_global_error_handler: Optional[ErrorHandler] = None


def get_error_handler() -> ErrorHandler:
    """Get the global error handler instance."""
    global _global_error_handler
    if _global_error_handler is None:
        _global_error_handler = ErrorHandler()
    return _global_error_handler


def handle_error(error: Union[Exception, LbsError], context: Optional[ErrorContext] = None) -> int:
    """Convenience function to handle errors using the global handler."""
    return get_error_handler().handle_error(error, context)
