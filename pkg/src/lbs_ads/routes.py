"""Route files: timed waypoints for one MSISDN, played back tick by tick.

A route file is one JSON document::

    {"msisdn": "923001234567", "waypoints": [{"t": 0, "x": 0.0, "y": 0.0}, ...]}

Waypoints may carry ``lat``/``lon`` instead of ``x``/``y`` when a projection
origin is supplied. A routes directory is loaded in filename order.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ErrorContext, FileSystemError, InvalidRecord, RouteError
from .geo import GeoPoint, project_equirectangular

logger = logging.getLogger(__name__)

Projection = Tuple[float, float]  # (origin_lat, origin_lon)
ROUTE_KEYS = {"msisdn", "waypoints"}
PLANAR_KEYS = {"t", "x", "y"}
GEODETIC_KEYS = {"t", "lat", "lon"}


@dataclass(frozen=True)
class Waypoint:
    t: float
    position: GeoPoint


@dataclass(frozen=True)
class Route:
    msisdn: str
    waypoints: Tuple[Waypoint, ...]

    def __post_init__(self) -> None:
        if not self.waypoints:
            raise InvalidRecord(f"route for {self.msisdn} has no waypoints")
        times = [w.t for w in self.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidRecord(f"route for {self.msisdn} has non-increasing timestamps")


def position_at(route: Route, t: float) -> GeoPoint:
    """Linear interpolation between waypoints, clamped at both ends."""
    times = [w.t for w in route.waypoints]
    xs = [w.position.x for w in route.waypoints]
    ys = [w.position.y for w in route.waypoints]
    return GeoPoint(float(np.interp(t, times, xs)), float(np.interp(t, times, ys)))


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def route_problems(document: Any) -> List[str]:
    """Every schema problem in a parsed route document (empty when valid)."""
    if not isinstance(document, dict):
        return ["$: expected an object"]
    problems: List[str] = []
    unknown = set(document) - ROUTE_KEYS
    if unknown:
        problems.append(f"$: unknown keys {sorted(unknown)}")
    msisdn = document.get("msisdn")
    if not isinstance(msisdn, str) or not msisdn.isdigit():
        problems.append("msisdn: expected a non-empty digit string")
    waypoints = document.get("waypoints")
    if not isinstance(waypoints, list) or not waypoints:
        problems.append("waypoints: expected a non-empty list")
        return problems

    previous_t: Optional[float] = None
    for i, raw in enumerate(waypoints):
        where = f"waypoints[{i}]"
        if not isinstance(raw, dict):
            problems.append(f"{where}: expected an object")
            continue
        keys = set(raw)
        if keys == PLANAR_KEYS:
            coords = ("x", "y")
        elif keys == GEODETIC_KEYS:
            coords = ("lat", "lon")
        else:
            problems.append(f"{where}: expected keys {sorted(PLANAR_KEYS)} or {sorted(GEODETIC_KEYS)}")
            continue
        for key in ("t",) + coords:
            if not _is_number(raw[key]):
                problems.append(f"{where}.{key}: expected a finite number")
        if _is_number(raw["t"]):
            if previous_t is not None and raw["t"] <= previous_t:
                problems.append(f"{where}.t: timestamps must be strictly increasing")
            previous_t = raw["t"]
    return problems


def _read_document(path: Path) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileSystemError(
            f"cannot read route file: {exc}", context=ErrorContext(file_path=path), cause=exc
        ) from exc
    except UnicodeDecodeError as exc:
        raise RouteError(
            f"route file is not UTF-8 text (byte {exc.start})", context=ErrorContext(file_path=path), cause=exc
        ) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise RouteError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            context=ErrorContext(file_path=path, line_number=exc.lineno),
            cause=exc,
        ) from exc


def parse_route(document: Any, projection: Optional[Projection] = None, source: Optional[Path] = None) -> Route:
    problems = route_problems(document)
    if problems:
        raise RouteError("; ".join(problems), context=ErrorContext(file_path=source))
    waypoints = []
    for raw in document["waypoints"]:
        if "lat" in raw:
            if projection is None:
                raise RouteError(
                    "lat/lon waypoints need a projection origin in the scenario config",
                    context=ErrorContext(file_path=source, field_path="waypoints"),
                )
            point = project_equirectangular(raw["lat"], raw["lon"], *projection)
        else:
            point = GeoPoint(float(raw["x"]), float(raw["y"]))
        waypoints.append(Waypoint(t=float(raw["t"]), position=point))
    return Route(msisdn=document["msisdn"], waypoints=tuple(waypoints))


def route_files(path: Path) -> List[Path]:
    path = Path(path)
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.is_file() and p.suffix == ".json")
    if path.is_file():
        return [path]
    raise FileSystemError(f"routes path does not exist: {path}", context=ErrorContext(file_path=path))


def load_route(path: Path, projection: Optional[Projection] = None) -> Route:
    path = Path(path)
    return parse_route(_read_document(path), projection, source=path)


def load_routes(path: Path, projection: Optional[Projection] = None) -> List[Route]:
    """Load a single route file or every ``*.json`` in a directory, by filename."""
    routes = [load_route(p, projection) for p in route_files(path)]
    seen = set()
    for route in routes:
        if route.msisdn in seen:
            raise RouteError(f"more than one route for msisdn {route.msisdn}", context=ErrorContext(file_path=Path(path)))
        seen.add(route.msisdn)
    logger.info("loaded %d route(s) from %s", len(routes), path)
    return routes


def validate_routes(path: Path) -> List[Tuple[Path, str]]:
    """Schema check only: (file, problem) for every problem found."""
    findings: List[Tuple[Path, str]] = []
    owners = {}
    for file in route_files(path):
        try:
            document = _read_document(file)
        except RouteError as exc:
            findings.append((file, exc.message))
            continue
        findings.extend((file, problem) for problem in route_problems(document))
        msisdn = document.get("msisdn") if isinstance(document, dict) else None
        if isinstance(msisdn, str):
            if msisdn in owners:
                findings.append((file, f"msisdn {msisdn} already routed by {owners[msisdn].name}"))
            owners.setdefault(msisdn, file)
    return findings


def routes_by_msisdn(routes: Sequence[Route]) -> List[Route]:
    return sorted(routes, key=lambda r: r.msisdn)
