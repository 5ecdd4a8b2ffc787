"""Advertisement rendering and delivery to the emulated SMSC.

Common users get a Flash text with the distance rounded to 50 m. Data users
with the application running get an app push with the distance to the meter;
with the application closed they fall back to Flash.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Any, Iterable, List, Optional, Protocol, Tuple

from .errors import ErrorContext, FileSystemError, NotAnEnterEvent
from .store import Advertiser, UserClass, UserProfile
from .trigger import EventKind, TriggerEvent

logger = logging.getLogger(__name__)

FLASH_GRANULARITY_M = 50


class MessageFormat(str, Enum):
    FLASH = "Flash"
    APP_PUSH = "AppPush"


@dataclass(frozen=True)
class AdMessage:
    msisdn: str
    advertiser_id: str
    approx_distance_m: int
    promo_text: str
    format: MessageFormat
    timestamp: int


class MessageSink(Protocol):
    def write(self, line: str) -> None: ...


@dataclass
class MemorySink:
    """In-memory collector, mostly for tests and embedding."""
    lines: List[str] = field(default_factory=list)

    def write(self, line: str) -> None:
        self.lines.append(line)


class FileSink:
    """Append-only JSONL file, truncated when opened."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._handle: Optional[IO[str]] = None
        self.count = 0

    def open(self) -> "FileSink":
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = self.path.open("w", encoding="utf-8", newline="\n")
        except OSError as exc:
            raise FileSystemError(
                f"cannot open sink: {exc}", context=ErrorContext(file_path=self.path), cause=exc
            ) from exc
        return self

    def write(self, line: str) -> None:
        if self._handle is None:
            self.open()
        try:
            self._handle.write(line + "\n")
        except OSError as exc:
            raise FileSystemError(
                f"cannot write sink: {exc}", context=ErrorContext(file_path=self.path), cause=exc
            ) from exc
        self.count += 1

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "FileSink":
        return self.open()

    def __exit__(self, *exc_info) -> None:
        self.close()


def round_half_up(value: float, step: int) -> int:
    return int(math.floor(value / step + 0.5)) * step


def render(event: TriggerEvent, user: UserProfile, adv: Advertiser) -> AdMessage:
    if event.kind is not EventKind.ENTER:
        raise NotAnEnterEvent(f"only Enter events become advertisements, got {event.kind.value}")

    if user.user_class is not UserClass.COMMON and user.app_active:
        fmt = MessageFormat.APP_PUSH
        approx = int(math.floor(event.distance))
    else:
        fmt = MessageFormat.FLASH
        approx = round_half_up(event.distance, FLASH_GRANULARITY_M)

    return AdMessage(
        msisdn=event.msisdn,
        advertiser_id=adv.advertiser_id,
        approx_distance_m=approx,
        promo_text=adv.promo_text,
        format=fmt,
        timestamp=event.timestamp,
    )


def _json_line(pairs: Iterable[Tuple[str, str]]) -> str:
    """Join already-encoded values into one JSON object with fixed key order."""
    return "{" + ", ".join(f"{json.dumps(key)}: {value}" for key, value in pairs) + "}"


def _encode(value: Any) -> str:
    return json.dumps(value, ensure_ascii=False)


def message_line(msg: AdMessage) -> str:
    return _json_line([
        ("msisdn", _encode(msg.msisdn)),
        ("advertiser_id", _encode(msg.advertiser_id)),
        ("approx_distance_m", _encode(msg.approx_distance_m)),
        ("promo_text", _encode(msg.promo_text)),
        ("format", _encode(msg.format.value)),
        ("timestamp", _encode(msg.timestamp)),
    ])


def event_line(event: TriggerEvent) -> str:
    return _json_line([
        ("kind", _encode(event.kind.value)),
        ("msisdn", _encode(event.msisdn)),
        ("counterpart", _encode(event.counterpart)),
        ("distance", f"{event.distance:.3f}"),
        ("timestamp", _encode(event.timestamp)),
    ])


def deliver(msg: AdMessage, sink: MessageSink) -> None:
    sink.write(message_line(msg))
    logger.debug("delivered %s ad from %s to %s", msg.format.value, msg.advertiser_id, msg.msisdn)
