"""Deterministic tick loop wiring the request, trigger and dispatch stages.

Per tick: every routed subscriber issues one MO-LR in MSISDN order, the
info-log is drained, the batch is evaluated for advertiser and proximity
triggers, every event is appended to the events stream, and Enter events
are rendered and delivered. The seed, snapshot, routes and config fully
determine every output byte.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from .config import SimConfig
from .dispatch import FileSink, MessageSink, deliver, event_line, render
from .errors import ConfigError
from .ldt import RandomStream
from .protocol import Gmlc, MoLrRequest
from .routes import Route, load_routes, position_at, routes_by_msisdn
from .store import Database, UserClass, load_snapshot
from .trigger import EventKind, PairState, TriggerEvent, enter_events, evaluate_batch, proximity_batch

logger = logging.getLogger(__name__)

EVENTS_FILE = "events.jsonl"
MESSAGES_FILE = "messages.jsonl"

TickObserver = Callable[[int, Database], None]


@dataclass
class SimReport:
    reports: int = 0
    enters: int = 0
    exits: int = 0
    proximities: int = 0
    messages: int = 0
    per_advertiser: Dict[str, int] = field(default_factory=dict)
    skipped_routes: List[str] = field(default_factory=list)
    events_path: Optional[Path] = None
    messages_path: Optional[Path] = None

    def count(self, events: Sequence[TriggerEvent]) -> None:
        for event in events:
            if event.kind is EventKind.ENTER:
                self.enters += 1
            elif event.kind is EventKind.EXIT:
                self.exits += 1
            else:
                self.proximities += 1


class Simulation:
    def __init__(
        self,
        cfg: SimConfig,
        db: Database,
        routes: Sequence[Route],
        event_sink: MessageSink,
        message_sink: MessageSink,
        observer: Optional[TickObserver] = None,
    ):
        self.cfg = cfg
        self.db = db
        self.event_sink = event_sink
        self.message_sink = message_sink
        self.observer = observer
        self.state = PairState()
        self.report = SimReport()
        self.gmlc = Gmlc.create(
            cfg.base_stations, db, RandomStream(cfg.seed), cfg.lcs_clients, cfg.ta_band
        )

        self.routes: List[Route] = []
        for route in routes_by_msisdn(routes):
            if route.msisdn in db.users:
                self.routes.append(route)
            else:
                logger.warning("skipping route for %s: not subscribed", route.msisdn)
                self.report.skipped_routes.append(route.msisdn)

        if not cfg.base_stations and any(u.user_class is UserClass.COMMON for u in db.users.values()):
            raise ConfigError(
                "base_stations: at least one base station is required when Common users exist"
            )

    def step(self, t: int) -> List[TriggerEvent]:
        for route in self.routes:
            self.gmlc.mo_lr(MoLrRequest(msisdn=route.msisdn, timestamp=t, true_position=position_at(route, t)))

        batch = self.db.drain_infolog()
        self.report.reports += len(batch)

        events = evaluate_batch(batch, self.db, self.state, self.cfg.trigger)
        events += proximity_batch(batch, self.state, self.cfg.trigger)

        for event in events:
            self.event_sink.write(event_line(event))
        for event in enter_events(events):
            message = render(event, self.db.users[event.msisdn], self.db.advertisements[event.counterpart])
            deliver(message, self.message_sink)
            self.report.messages += 1
            tally = self.report.per_advertiser
            tally[message.advertiser_id] = tally.get(message.advertiser_id, 0) + 1

        self.report.count(events)
        logger.debug("tick %d: %d reports, %d events", t, len(batch), len(events))
        return events

    def run(self) -> SimReport:
        for t in range(self.cfg.ticks):
            self.step(t)
            if self.observer:
                self.observer(t, self.db)
        self.report.per_advertiser = dict(sorted(self.report.per_advertiser.items()))
        return self.report


def run(cfg: SimConfig, observer: Optional[TickObserver] = None) -> SimReport:
    """Run a scenario from its files and write events.jsonl and messages.jsonl."""
    db = load_snapshot(cfg.snapshot_path)
    routes = load_routes(cfg.routes_path, cfg.projection)

    events_path = cfg.out_dir / EVENTS_FILE
    messages_path = cfg.out_dir / MESSAGES_FILE
    with FileSink(events_path) as event_sink, FileSink(messages_path) as message_sink:
        report = Simulation(cfg, db, routes, event_sink, message_sink, observer).run()

    report.events_path = events_path
    report.messages_path = messages_path
    logger.info(
        "simulation finished: %d reports, %d enters, %d messages",
        report.reports, report.enters, report.messages,
    )
    return report
