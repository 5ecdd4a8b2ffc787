from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

REDACTED_KEYS = {"secret", "new_secret"}


@dataclass
class AuditEvent:
    """Represents one registry audit record."""
    timestamp: str
    event_type: str
    action: str
    resource: Optional[str] = None
    details: Optional[Dict[str, Any]] = None
    success: bool = True
    error_message: Optional[str] = None


class AuditLogger:
    """Appends registry changes and credential failures to a JSONL file."""

    def __init__(self, audit_file: Path):
        self.audit_file = Path(audit_file)
        self.audit_file.parent.mkdir(parents=True, exist_ok=True)
        self.logger = self._setup_logger()

    def _setup_logger(self) -> logging.Logger:
        logger = logging.getLogger(f"lbs_ads.audit.{self.audit_file}")
        logger.setLevel(logging.INFO)

        for handler in logger.handlers[:]:
            handler.close()
            logger.removeHandler(handler)

        handler = logging.FileHandler(self.audit_file, encoding="utf-8", delay=True)
        handler.setLevel(logging.INFO)
        handler.setFormatter(logging.Formatter('%(message)s'))

        logger.addHandler(handler)
        logger.propagate = False
        return logger

    def close(self) -> None:
        for handler in self.logger.handlers[:]:
            handler.close()
            self.logger.removeHandler(handler)

    def _sanitize_details(self, details: Optional[Dict[str, Any]]) -> Optional[Dict[str, Any]]:
        if not details:
            return details
        return {key: ("<redacted>" if key in REDACTED_KEYS else value) for key, value in details.items()}

    def log_event(
        self,
        event_type: str,
        action: str,
        resource: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
        success: bool = True,
        error_message: Optional[str] = None,
    ) -> None:
        event = AuditEvent(
            timestamp=datetime.now().isoformat(),
            event_type=event_type,
            action=action,
            resource=resource,
            details=self._sanitize_details(details),
            success=success,
            error_message=error_message,
        )
        self.logger.info(json.dumps(asdict(event), default=str))

    def log_advertiser_change(self, action: str, advertiser_id: str, details: Optional[Dict] = None) -> None:
        self.log_event(event_type="advertiser", action=action, resource=advertiser_id, details=details)

    def log_user_change(self, action: str, msisdn: str, details: Optional[Dict] = None) -> None:
        self.log_event(event_type="user", action=action, resource=msisdn, details=details)

    def log_credential_failure(self, advertiser_id: str, action: str) -> None:
        self.log_event(
            event_type="security",
            action=action,
            resource=advertiser_id,
            success=False,
            error_message="bad credential",
        )

    def log_error(self, error_type: str, error_message: str, details: Optional[Dict] = None) -> None:
        self.log_event(
            event_type="error",
            action=error_type,
            error_message=error_message,
            details=details,
            success=False,
        )

    def get_audit_summary(self) -> Dict[str, Any]:
        """Counts of recorded events by type plus the failure count."""
        summary: Dict[str, Any] = {"total_events": 0, "event_types": {}, "failures": 0}
        if not self.audit_file.exists():
            return summary
        for line in self.audit_file.read_text(encoding="utf-8").splitlines():
            try:
                event = json.loads(line)
            except json.JSONDecodeError:
                continue
            summary["total_events"] += 1
            event_type = event.get("event_type", "unknown")
            summary["event_types"][event_type] = summary["event_types"].get(event_type, 0) + 1
            if not event.get("success", True):
                summary["failures"] += 1
        return summary


def audit_path_for(snapshot_path: Path) -> Path:
    snapshot_path = Path(snapshot_path)
    return snapshot_path.with_name(snapshot_path.name + ".audit.jsonl")


def create_audit_logger(snapshot_path: Path) -> AuditLogger:
    """Factory for the audit log kept beside a registry snapshot."""
    return AuditLogger(audit_path_for(snapshot_path))
