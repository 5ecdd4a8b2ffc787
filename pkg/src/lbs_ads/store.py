"""Server-side database: users, advertisements and the volatile info-log.

The advertiser records can only be changed by a caller holding the record's
secret. The info-log holds at most one pending report per MSISDN per tick and
is emptied every time it is drained.
"""
from __future__ import annotations

import bisect
import hmac
import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional

from .errors import (
    BadCredential,
    DuplicateId,
    EmptySubscription,
    ErrorContext,
    FileSystemError,
    InvalidRecord,
    MalformedSnapshot,
    UnknownId,
    UnknownUser,
)
from .geo import GeoPoint
from .ldt import LocationFix

logger = logging.getLogger(__name__)


class UserClass(str, Enum):
    COMMON = "Common"
    GPRS = "Gprs"
    GPRS_GPS = "GprsGps"


@dataclass(frozen=True)
class UserProfile:
    msisdn: str
    user_class: UserClass
    subscriptions: FrozenSet[str]
    app_active: bool = False

    def __post_init__(self) -> None:
        if not self.msisdn or not self.msisdn.isdigit():
            raise InvalidRecord(f"msisdn must be a non-empty digit string, got {self.msisdn!r}")
        object.__setattr__(self, "user_class", UserClass(self.user_class))
        object.__setattr__(self, "subscriptions", frozenset(self.subscriptions))
        if not self.subscriptions:
            raise EmptySubscription(f"user {self.msisdn} must subscribe to at least one service type")


@dataclass(frozen=True)
class Advertiser:
    advertiser_id: str
    secret: str
    position: GeoPoint
    service_type: str
    promo_text: str = ""
    trigger_limit: Optional[float] = None

    def __post_init__(self) -> None:
        if not self.advertiser_id:
            raise InvalidRecord("advertiser_id must be non-empty")
        if not self.service_type:
            raise InvalidRecord(f"advertiser {self.advertiser_id} needs a service type")
        if self.trigger_limit is not None and not (math.isfinite(self.trigger_limit) and self.trigger_limit > 0):
            raise InvalidRecord(f"trigger_limit must be > 0, got {self.trigger_limit}")


@dataclass(frozen=True)
class LocationReport:
    """A fix for one MSISDN at one tick; the unit stored in the info-log."""
    msisdn: str
    fix: LocationFix
    timestamp: int


InfoLogEntry = LocationReport

ADVERTISER_CHANGES = frozenset({"secret", "position", "service_type", "promo_text", "trigger_limit"})


def _sort_key(entry: InfoLogEntry):
    return (entry.timestamp, entry.msisdn)


@dataclass
class Database:
    users: Dict[str, UserProfile] = field(default_factory=dict)
    advertisements: Dict[str, Advertiser] = field(default_factory=dict)
    infolog: List[InfoLogEntry] = field(default_factory=list)

    # -- advertisement section -------------------------------------------------

    def register_advertiser(self, adv: Advertiser) -> None:
        if adv.advertiser_id in self.advertisements:
            raise DuplicateId(f"advertiser '{adv.advertiser_id}' is already registered")
        self.advertisements[adv.advertiser_id] = adv
        logger.info("registered advertiser %s (%s)", adv.advertiser_id, adv.service_type)

    def _authorized(self, advertiser_id: str, secret: str) -> Advertiser:
        try:
            current = self.advertisements[advertiser_id]
        except KeyError:
            raise UnknownId(f"no advertiser with id '{advertiser_id}'") from None
        if not hmac.compare_digest(current.secret.encode(), secret.encode()):
            raise BadCredential(f"secret does not match advertiser '{advertiser_id}'")
        return current

    def update_advertiser(self, advertiser_id: str, secret: str, changes: Mapping[str, Any]) -> Advertiser:
        current = self._authorized(advertiser_id, secret)
        unknown = set(changes) - ADVERTISER_CHANGES
        if unknown:
            raise InvalidRecord(f"cannot change advertiser fields: {', '.join(sorted(unknown))}")
        updated = replace(current, **dict(changes))
        self.advertisements[advertiser_id] = updated
        logger.info("updated advertiser %s: %s", advertiser_id, ", ".join(sorted(changes)) or "no changes")
        return updated

    def remove_advertiser(self, advertiser_id: str, secret: str) -> Advertiser:
        removed = self._authorized(advertiser_id, secret)
        del self.advertisements[advertiser_id]
        logger.info("removed advertiser %s", advertiser_id)
        return removed

    def list_advertisers(self) -> List[Advertiser]:
        return [self.advertisements[key] for key in sorted(self.advertisements)]

    # -- user section ----------------------------------------------------------

    def subscribe_user(self, msisdn: str, user_class: UserClass, subscriptions: Iterable[str]) -> UserProfile:
        """Store or fully replace a subscriber; the app starts inactive."""
        services = frozenset(s for s in subscriptions)
        if not services:
            raise EmptySubscription(f"user {msisdn} must subscribe to at least one service type")
        profile = UserProfile(msisdn=msisdn, user_class=user_class, subscriptions=services, app_active=False)
        self.users[msisdn] = profile
        logger.info("subscribed %s as %s to %s", msisdn, profile.user_class.value, ", ".join(sorted(services)))
        return profile

    def unsubscribe_user(self, msisdn: str) -> UserProfile:
        try:
            return self.users.pop(msisdn)
        except KeyError:
            raise UnknownUser(f"{msisdn} is not subscribed") from None

    def set_app_active(self, msisdn: str, active: bool) -> UserProfile:
        profile = self.require_user(msisdn)
        updated = replace(profile, app_active=active)
        self.users[msisdn] = updated
        return updated

    def require_user(self, msisdn: str) -> UserProfile:
        try:
            return self.users[msisdn]
        except KeyError:
            raise UnknownUser(f"{msisdn} is not subscribed") from None

    def list_users(self) -> List[UserProfile]:
        return [self.users[key] for key in sorted(self.users)]

    # -- info-log section ------------------------------------------------------

    def append_infolog(self, entry: InfoLogEntry) -> None:
        self.require_user(entry.msisdn)
        key = _sort_key(entry)
        index = bisect.bisect_left(self.infolog, key, key=_sort_key)
        if index < len(self.infolog) and _sort_key(self.infolog[index]) == key:
            # most recent location wins within a tick
            self.infolog[index] = entry
        else:
            self.infolog.insert(index, entry)

    def drain_infolog(self) -> List[InfoLogEntry]:
        drained, self.infolog = self.infolog, []
        return drained


# -- snapshot file -------------------------------------------------------------

SNAPSHOT_KEYS = {"users", "advertisements"}
USER_KEYS = {"msisdn", "user_class", "subscriptions", "app_active"}
ADVERTISER_KEYS = {"advertiser_id", "secret", "position", "service_type", "promo_text", "trigger_limit"}
POINT_KEYS = {"x", "y"}


def _user_to_dict(user: UserProfile) -> Dict[str, Any]:
    return {
        "msisdn": user.msisdn,
        "user_class": user.user_class.value,
        "subscriptions": sorted(user.subscriptions),
        "app_active": user.app_active,
    }


def _advertiser_to_dict(adv: Advertiser) -> Dict[str, Any]:
    return {
        "advertiser_id": adv.advertiser_id,
        "secret": adv.secret,
        "position": {"x": adv.position.x, "y": adv.position.y},
        "service_type": adv.service_type,
        "promo_text": adv.promo_text,
        "trigger_limit": adv.trigger_limit,
    }


def snapshot_document(db: Database) -> Dict[str, Any]:
    return {
        "users": [_user_to_dict(u) for u in db.list_users()],
        "advertisements": [_advertiser_to_dict(a) for a in db.list_advertisers()],
    }


def save_snapshot(db: Database, path: Path) -> None:
    """Write users and advertisements; the info-log is never persisted."""
    path = Path(path)
    text = json.dumps(snapshot_document(db), indent=2) + "\n"
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
    except OSError as exc:
        raise FileSystemError(
            f"cannot write snapshot: {exc}", context=ErrorContext(file_path=path), cause=exc
        ) from exc


class _SnapshotReader:
    def __init__(self, path: Path):
        self.path = path

    def fail(self, field_path: str, message: str) -> MalformedSnapshot:
        return MalformedSnapshot(
            f"{field_path}: {message}",
            context=ErrorContext(file_path=self.path, field_path=field_path),
        )

    def mapping(self, value: Any, allowed: set, required: set, field_path: str) -> Dict[str, Any]:
        if not isinstance(value, dict):
            raise self.fail(field_path, "expected an object")
        unknown = set(value) - allowed
        if unknown:
            raise self.fail(field_path, f"unknown keys {sorted(unknown)}")
        missing = required - set(value)
        if missing:
            raise self.fail(field_path, f"missing keys {sorted(missing)}")
        return value

    def string(self, value: Any, field_path: str) -> str:
        if not isinstance(value, str):
            raise self.fail(field_path, "expected a string")
        return value

    def number(self, value: Any, field_path: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(field_path, "expected a number")
        return float(value)

    def user(self, raw: Any, field_path: str) -> UserProfile:
        data = self.mapping(raw, USER_KEYS, USER_KEYS, field_path)
        subs = data["subscriptions"]
        if not isinstance(subs, list):
            raise self.fail(f"{field_path}.subscriptions", "expected a list")
        if not isinstance(data["app_active"], bool):
            raise self.fail(f"{field_path}.app_active", "expected a boolean")
        try:
            return UserProfile(
                msisdn=self.string(data["msisdn"], f"{field_path}.msisdn"),
                user_class=UserClass(data["user_class"]),
                subscriptions=frozenset(
                    self.string(s, f"{field_path}.subscriptions[{i}]") for i, s in enumerate(subs)
                ),
                app_active=data["app_active"],
            )
        except ValueError as exc:
            raise self.fail(f"{field_path}.user_class", str(exc)) from exc
        except (InvalidRecord, EmptySubscription) as exc:
            raise self.fail(field_path, exc.message) from exc

    def advertiser(self, raw: Any, field_path: str) -> Advertiser:
        data = self.mapping(raw, ADVERTISER_KEYS, ADVERTISER_KEYS - {"trigger_limit", "promo_text"}, field_path)
        point = self.mapping(data["position"], POINT_KEYS, POINT_KEYS, f"{field_path}.position")
        limit = data.get("trigger_limit")
        try:
            return Advertiser(
                advertiser_id=self.string(data["advertiser_id"], f"{field_path}.advertiser_id"),
                secret=self.string(data["secret"], f"{field_path}.secret"),
                position=GeoPoint(
                    self.number(point["x"], f"{field_path}.position.x"),
                    self.number(point["y"], f"{field_path}.position.y"),
                ),
                service_type=self.string(data["service_type"], f"{field_path}.service_type"),
                promo_text=self.string(data.get("promo_text", ""), f"{field_path}.promo_text"),
                trigger_limit=None if limit is None else self.number(limit, f"{field_path}.trigger_limit"),
            )
        except InvalidRecord as exc:
            raise self.fail(field_path, exc.message) from exc

    def database(self, document: Any) -> Database:
        doc = self.mapping(document, SNAPSHOT_KEYS, SNAPSHOT_KEYS, "$")
        db = Database()
        for key in ("users", "advertisements"):
            if not isinstance(doc[key], list):
                raise self.fail(key, "expected a list")
        for i, raw in enumerate(doc["users"]):
            user = self.user(raw, f"users[{i}]")
            if user.msisdn in db.users:
                raise self.fail(f"users[{i}].msisdn", f"duplicate msisdn {user.msisdn}")
            db.users[user.msisdn] = user
        for i, raw in enumerate(doc["advertisements"]):
            adv = self.advertiser(raw, f"advertisements[{i}]")
            if adv.advertiser_id in db.advertisements:
                raise self.fail(f"advertisements[{i}].advertiser_id", f"duplicate id {adv.advertiser_id}")
            db.advertisements[adv.advertiser_id] = adv
        return db


def load_snapshot(path: Path) -> Database:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileSystemError(
            f"cannot read snapshot: {exc}", context=ErrorContext(file_path=path), cause=exc
        ) from exc
    except UnicodeDecodeError as exc:
        raise MalformedSnapshot(
            f"snapshot is not UTF-8 text (byte {exc.start})", context=ErrorContext(file_path=path), cause=exc
        ) from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedSnapshot(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            context=ErrorContext(file_path=path, line_number=exc.lineno),
            cause=exc,
        ) from exc
    return _SnapshotReader(path).database(document)


def load_or_create_snapshot(path: Path) -> Database:
    """Load a snapshot, starting an empty database when the file is absent."""
    if not Path(path).exists():
        return Database()
    return load_snapshot(path)


