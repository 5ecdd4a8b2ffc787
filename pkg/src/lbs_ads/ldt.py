"""Location determination technique (LDT) emulation.

Each technique turns a true position into a reported point plus an uncertainty
region. Cell-ID with timing advance yields an annular sector around the
serving base station; the measurement-based techniques yield a circle whose
radius is the technique's worst-case urban error.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

from .errors import EmptyNetwork, InvalidRecord
from .geo import AnnularSector, Circle, GeoPoint, UncertaintyRegion, anchor, azimuth, distance

logger = logging.getLogger(__name__)

# Close to the GSM timing-advance step (~553.85 m), rounded.
TA_BAND_M = 550.0
DEFAULT_SECTOR_WIDTH = 120.0
SEED_MASK = (1 << 64) - 1


class LdtMethod(str, Enum):
    CGI_TA = "CgiTa"
    ECGI = "Ecgi"
    TOA = "Toa"
    EOTD = "Eotd"
    AGPS = "Agps"


# Urban accuracy envelopes in meters.
ACCURACY_RANGES: Dict[LdtMethod, Tuple[float, float]] = {
    LdtMethod.CGI_TA: (100.0, 1100.0),
    LdtMethod.ECGI: (50.0, 550.0),
    LdtMethod.TOA: (125.0, 200.0),
    LdtMethod.EOTD: (50.0, 150.0),
    LdtMethod.AGPS: (5.0, 40.0),
}


@dataclass(frozen=True)
class BaseStation:
    id: str
    position: GeoPoint
    sector_width: float = DEFAULT_SECTOR_WIDTH

    def __post_init__(self) -> None:
        if not self.id:
            raise InvalidRecord("base station id must be non-empty")
        if not (0 < self.sector_width <= 360):
            raise InvalidRecord(f"sector_width must be in (0, 360], got {self.sector_width}")


@dataclass(frozen=True)
class LocationFix:
    reported: GeoPoint
    region: UncertaintyRegion
    method: LdtMethod


class RandomStream:
    """Seeded PCG64 stream; equal seeds and draw order give equal outputs."""

    def __init__(self, seed: int):
        self.seed = int(seed) & SEED_MASK
        self._generator = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, low: float, high: float) -> float:
        return float(self._generator.uniform(low, high))


def accuracy_range(method: LdtMethod) -> Tuple[float, float]:
    return ACCURACY_RANGES[LdtMethod(method)]


def check_network(network: Iterable[BaseStation]) -> None:
    """Reject duplicate base-station ids."""
    seen = set()
    for station in network:
        if station.id in seen:
            raise InvalidRecord(f"duplicate base station id '{station.id}'")
        seen.add(station.id)


def serving_cell(true_pos: GeoPoint, network: Sequence[BaseStation]) -> BaseStation:
    """Nearest base station; ties go to the lexicographically smallest id."""
    if not network:
        raise EmptyNetwork("no base stations to serve the mobile station")
    return min(network, key=lambda bs: (distance(bs.position, true_pos), bs.id))


def cell_sector_region(true_pos: GeoPoint, station: BaseStation, ta_band: float = TA_BAND_M) -> AnnularSector:
    """Timing-advance band and antenna sector of `station` that hold `true_pos`."""
    r = distance(station.position, true_pos)
    band = math.floor(r / ta_band)
    if band > 0 and band * ta_band > r:
        band -= 1
    az = azimuth(station.position, true_pos)
    sector = math.floor(az / station.sector_width)
    # the float product can land just past the bearing
    if sector > 0 and sector * station.sector_width > az:
        sector -= 1
    start = (sector * station.sector_width) % 360.0
    return AnnularSector(
        origin=station.position,
        inner_radius=band * ta_band,
        outer_radius=(band + 1) * ta_band,
        start_azimuth=start,
        arc_width=station.sector_width,
    )


def measure(
    true_pos: GeoPoint,
    method: LdtMethod,
    network: Sequence[BaseStation],
    rng: RandomStream,
    ta_band: float = TA_BAND_M,
) -> LocationFix:
    """Emulate one positioning attempt.

    CgiTa consumes no random draws. The other techniques draw the error
    magnitude first, then its bearing.
    """
    method = LdtMethod(method)
    if method is LdtMethod.CGI_TA:
        station = serving_cell(true_pos, network)
        region = cell_sector_region(true_pos, station, ta_band)
        return LocationFix(reported=anchor(region), region=region, method=method)

    low, high = accuracy_range(method)
    magnitude = rng.uniform(low, high)
    bearing = rng.uniform(0.0, 360.0)
    reported = true_pos.offset(magnitude, bearing)
    logger.debug("%s fix off by %.2f m at %.1f deg", method.value, magnitude, bearing)
    return LocationFix(reported=reported, region=Circle(center=reported, radius=high), method=method)
