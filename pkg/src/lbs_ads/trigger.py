"""Spatial-trigger engine.

Each drained batch of location reports is checked against every advertiser
whose service type the user subscribes to, and every pair of reports in the
batch is checked for proximity. Triggers are edge-triggered: Enter fires when
the distance drops below the limit, and the pair re-arms (Exit) only after
the distance exceeds the limit inflated by the hysteresis fraction.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Sequence, Tuple

from .errors import InvalidRecord
from .geo import distance, min_distance_to_region
from .store import Advertiser, Database, LocationReport

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TriggerConfig:
    default_limit: float = 500.0
    hysteresis_fraction: float = 0.10
    conservative_mode: bool = False
    proximity_threshold: float = 200.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.default_limit) and self.default_limit > 0):
            raise InvalidRecord(f"default_limit must be > 0, got {self.default_limit}")
        if not (0 <= self.hysteresis_fraction < 1):
            raise InvalidRecord(f"hysteresis_fraction must be in [0, 1), got {self.hysteresis_fraction}")
        if not (math.isfinite(self.proximity_threshold) and self.proximity_threshold > 0):
            raise InvalidRecord(f"proximity_threshold must be > 0, got {self.proximity_threshold}")


class Zone(str, Enum):
    INSIDE = "Inside"
    OUTSIDE = "Outside"


class Closeness(str, Enum):
    NEAR = "Near"
    APART = "Apart"


class EventKind(str, Enum):
    ENTER = "Enter"
    EXIT = "Exit"
    PROXIMITY = "Proximity"


@dataclass
class PairState:
    """Last known state of every (user, advertiser) and (user, user) pair seen so far."""
    zones: Dict[Tuple[str, str], Zone] = field(default_factory=dict)
    closeness: Dict[Tuple[str, str], Closeness] = field(default_factory=dict)


@dataclass(frozen=True)
class TriggerEvent:
    kind: EventKind
    msisdn: str
    counterpart: str
    distance: float
    timestamp: int

    def sort_key(self) -> Tuple[int, str, str]:
        return (self.timestamp, self.msisdn, self.counterpart)


def effective_limit(adv: Advertiser, cfg: TriggerConfig) -> float:
    return adv.trigger_limit if adv.trigger_limit is not None else cfg.default_limit


def _advertiser_distance(report: LocationReport, adv: Advertiser, cfg: TriggerConfig) -> float:
    if cfg.conservative_mode:
        return min_distance_to_region(adv.position, report.fix.region)
    return distance(report.fix.reported, adv.position)


def evaluate_batch(
    reports: Sequence[LocationReport],
    db: Database,
    state: PairState,
    cfg: TriggerConfig,
) -> List[TriggerEvent]:
    """Evaluate reports against the advertisement section; updates `state` in place.

    Reports must arrive in (timestamp, msisdn) order. Events come back ordered
    by (timestamp, msisdn, advertiser_id).
    """
    advertisers = db.list_advertisers()
    events: List[TriggerEvent] = []
    for report in reports:
        user = db.users.get(report.msisdn)
        if user is None:
            logger.warning("skipping report for unknown msisdn %s", report.msisdn)
            continue
        for adv in advertisers:
            if adv.service_type not in user.subscriptions:
                continue
            key = (report.msisdn, adv.advertiser_id)
            limit = effective_limit(adv, cfg)
            d = _advertiser_distance(report, adv, cfg)
            previous = state.zones.get(key, Zone.OUTSIDE)
            if previous is Zone.OUTSIDE:
                if d < limit:
                    state.zones[key] = Zone.INSIDE
                    events.append(TriggerEvent(EventKind.ENTER, report.msisdn, adv.advertiser_id, d, report.timestamp))
                else:
                    state.zones[key] = Zone.OUTSIDE
            elif d > limit * (1 + cfg.hysteresis_fraction):
                state.zones[key] = Zone.OUTSIDE
                events.append(TriggerEvent(EventKind.EXIT, report.msisdn, adv.advertiser_id, d, report.timestamp))
    events.sort(key=TriggerEvent.sort_key)
    return events


def proximity_batch(
    reports: Sequence[LocationReport],
    state: PairState,
    cfg: TriggerConfig,
) -> List[TriggerEvent]:
    """Detect mobiles coming close to each other; one event per unordered pair."""
    release = cfg.proximity_threshold * (1 + cfg.hysteresis_fraction)
    events: List[TriggerEvent] = []
    ordered = sorted(reports, key=lambda r: (r.timestamp, r.msisdn))
    for _, same_tick in itertools.groupby(ordered, key=lambda r: r.timestamp):
        batch = list(same_tick)
        for a, b in itertools.combinations(batch, 2):
            if a.msisdn == b.msisdn:
                continue
            first, second = sorted((a, b), key=lambda r: r.msisdn)
            key = (first.msisdn, second.msisdn)
            d = distance(first.fix.reported, second.fix.reported)
            previous = state.closeness.get(key, Closeness.APART)
            if previous is Closeness.APART:
                if d < cfg.proximity_threshold:
                    state.closeness[key] = Closeness.NEAR
                    events.append(TriggerEvent(EventKind.PROXIMITY, first.msisdn, second.msisdn, d, first.timestamp))
                else:
                    state.closeness[key] = Closeness.APART
            elif d >= release:
                state.closeness[key] = Closeness.APART
    events.sort(key=TriggerEvent.sort_key)
    return events


def enter_events(events: Iterable[TriggerEvent]) -> List[TriggerEvent]:
    return [e for e in events if e.kind is EventKind.ENTER]
