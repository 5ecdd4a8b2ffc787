"""Planar geometry for location fixes.

Positions are meters in a local east/north frame. Azimuths are degrees
clockwise from north (+y), so the azimuth of (1, 0) seen from the origin is 90.
Regions are closed: boundary points are contained.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import InvalidRecord

# Absorbs float round-off when a point is reconstructed from polar form.
EPSILON = 1e-9
EARTH_RADIUS_M = 6_371_008.8


@dataclass(frozen=True)
class GeoPoint:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidRecord(f"coordinates must be finite, got ({self.x}, {self.y})")

    def offset(self, magnitude: float, azimuth_deg: float) -> "GeoPoint":
        """Point displaced by `magnitude` meters along `azimuth_deg`."""
        rad = math.radians(azimuth_deg)
        return GeoPoint(self.x + magnitude * math.sin(rad), self.y + magnitude * math.cos(rad))


@dataclass(frozen=True)
class Circle:
    center: GeoPoint
    radius: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.radius) or self.radius < 0:
            raise InvalidRecord(f"circle radius must be >= 0, got {self.radius}")


@dataclass(frozen=True)
class AnnularSector:
    origin: GeoPoint
    inner_radius: float
    outer_radius: float
    start_azimuth: float
    arc_width: float

    def __post_init__(self) -> None:
        if not (0 <= self.inner_radius < self.outer_radius) or not math.isfinite(self.outer_radius):
            raise InvalidRecord(
                f"sector needs 0 <= inner_radius < outer_radius, got {self.inner_radius}, {self.outer_radius}"
            )
        if not (0 < self.arc_width <= 360):
            raise InvalidRecord(f"arc_width must be in (0, 360], got {self.arc_width}")
        if not (0 <= self.start_azimuth < 360):
            raise InvalidRecord(f"start_azimuth must be in [0, 360), got {self.start_azimuth}")


UncertaintyRegion = Union[Circle, AnnularSector]


def distance(a: GeoPoint, b: GeoPoint) -> float:
    return math.hypot(b.x - a.x, b.y - a.y)


def azimuth(origin: GeoPoint, p: GeoPoint) -> float:
    """Bearing from `origin` to `p` in [0, 360); 0 when the points coincide."""
    dx, dy = p.x - origin.x, p.y - origin.y
    if dx == 0 and dy == 0:
        return 0.0
    deg = math.degrees(math.atan2(dx, dy)) % 360.0
    # -0.0 % 360 and tiny negatives can land exactly on 360
    return 0.0 if deg >= 360.0 else deg


def _within_arc(az: float, start: float, width: float) -> bool:
    if width >= 360:
        return True
    # tolerance on both arc edges
    return (az - start + EPSILON) % 360.0 <= width + 2 * EPSILON


def contains(region: UncertaintyRegion, p: GeoPoint) -> bool:
    if isinstance(region, Circle):
        return distance(region.center, p) <= region.radius + EPSILON
    d = distance(region.origin, p)
    if d < region.inner_radius - EPSILON or d > region.outer_radius + EPSILON:
        return False
    if d <= EPSILON:
        # the apex only belongs to sectors that start at the origin
        return True
    return _within_arc(azimuth(region.origin, p), region.start_azimuth, region.arc_width)


def anchor(region: UncertaintyRegion) -> GeoPoint:
    """Single representative point reported for a region."""
    if isinstance(region, Circle):
        return region.center
    mid_radius = (region.inner_radius + region.outer_radius) / 2
    bisector = (region.start_azimuth + region.arc_width / 2) % 360.0
    return region.origin.offset(mid_radius, bisector)


def _distance_to_segment(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> float:
    vx, vy = b.x - a.x, b.y - a.y
    length_sq = vx * vx + vy * vy
    if length_sq == 0:
        return distance(p, a)
    t = ((p.x - a.x) * vx + (p.y - a.y) * vy) / length_sq
    t = max(0.0, min(1.0, t))
    return math.hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy))


def min_distance_to_region(p: GeoPoint, region: UncertaintyRegion) -> float:
    """Shortest distance from `p` to any point of `region` (0 inside)."""
    if isinstance(region, Circle):
        return max(0.0, distance(p, region.center) - region.radius)
    if contains(region, p):
        return 0.0

    d = distance(region.origin, p)
    if d > EPSILON and _within_arc(azimuth(region.origin, p), region.start_azimuth, region.arc_width):
        if d < region.inner_radius:
            return region.inner_radius - d
        return d - region.outer_radius
    if d <= EPSILON:
        return region.inner_radius

    # Outside the wedge the nearest point lies on one of the two radial edges.
    best = math.inf
    for edge_az in (region.start_azimuth, region.start_azimuth + region.arc_width):
        inner = region.origin.offset(region.inner_radius, edge_az)
        outer = region.origin.offset(region.outer_radius, edge_az)
        best = min(best, _distance_to_segment(p, inner, outer))
    return best


def project_equirectangular(lat: float, lon: float, origin_lat: float, origin_lon: float) -> GeoPoint:
    """Project lat/lon degrees onto the planar frame centred at the origin."""
    x = math.radians(lon - origin_lon) * math.cos(math.radians(origin_lat)) * EARTH_RADIUS_M
    y = math.radians(lat - origin_lat) * EARTH_RADIUS_M
    return GeoPoint(x, y)
