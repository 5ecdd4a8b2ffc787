from __future__ import annotations

import json
from pathlib import Path

from lbs_ads.audit import AuditEvent, AuditLogger, audit_path_for, create_audit_logger


def read_events(path: Path):
    return [json.loads(line) for line in path.read_text().splitlines()]


class TestAuditEvent:
    """Test AuditEvent dataclass functionality."""

    def test_defaults(self):
        event = AuditEvent(timestamp="2024-01-01T12:00:00", event_type="advertiser", action="register")
        assert event.resource is None
        assert event.details is None
        assert event.success is True
        assert event.error_message is None


class TestAuditLogger:
    """Registry changes land in a JSONL file beside the snapshot."""

    def test_path_beside_snapshot(self, tmp_path: Path):
        assert audit_path_for(tmp_path / "db.json") == tmp_path / "db.json.audit.jsonl"

    def test_advertiser_change(self, tmp_path: Path):
        audit = create_audit_logger(tmp_path / "db.json")
        audit.log_advertiser_change("register", "pizza-01", {"service_type": "food"})
        audit.close()
        (event,) = read_events(audit.audit_file)
        assert (event["event_type"], event["action"], event["resource"]) == ("advertiser", "register", "pizza-01")
        assert event["details"] == {"service_type": "food"}
        assert event["success"] is True

    def test_secrets_redacted(self, tmp_path: Path):
        audit = AuditLogger(tmp_path / "audit.jsonl")
        audit.log_advertiser_change("update", "pizza-01", {"secret": "s3cret", "new_secret": "n3w", "promo_text": "x"})
        audit.close()
        text = audit.audit_file.read_text()
        assert "s3cret" not in text
        assert "n3w" not in text
        (event,) = read_events(audit.audit_file)
        assert event["details"]["promo_text"] == "x"

    def test_credential_failure(self, tmp_path: Path):
        audit = AuditLogger(tmp_path / "audit.jsonl")
        audit.log_credential_failure("pizza-01", "remove")
        audit.close()
        (event,) = read_events(audit.audit_file)
        assert event["event_type"] == "security"
        assert event["success"] is False

    def test_appends_across_instances(self, tmp_path: Path):
        for msisdn in ("923000000001", "923000000002"):
            audit = AuditLogger(tmp_path / "audit.jsonl")
            audit.log_user_change("subscribe", msisdn)
            audit.close()
        assert [e["resource"] for e in read_events(tmp_path / "audit.jsonl")] == ["923000000001", "923000000002"]

    def test_summary(self, tmp_path: Path):
        audit = AuditLogger(tmp_path / "audit.jsonl")
        audit.log_user_change("subscribe", "923000000001")
        audit.log_credential_failure("pizza-01", "update")
        audit.log_error("DuplicateId", "already registered")
        summary = audit.get_audit_summary()
        audit.close()
        assert summary["total_events"] == 3
        assert summary["event_types"] == {"user": 1, "security": 1, "error": 1}
        assert summary["failures"] == 2

    def test_file_created_on_first_event(self, tmp_path: Path):
        audit = AuditLogger(tmp_path / "audit.jsonl")
        assert not audit.audit_file.exists()
        audit.log_user_change("subscribe", "923000000001")
        audit.close()
        assert audit.audit_file.exists()

    def test_summary_without_file(self, tmp_path: Path):
        audit = AuditLogger(tmp_path / "audit.jsonl")
        audit.close()
        audit.audit_file.unlink(missing_ok=True)
        assert audit.get_audit_summary()["total_events"] == 0
