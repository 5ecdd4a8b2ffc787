from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pytest

from lbs_ads.geo import Circle, GeoPoint
from lbs_ads.ldt import LdtMethod, LocationFix
from lbs_ads.store import Advertiser, Database, LocationReport, UserClass


def circle_report(msisdn: str, x: float, y: float, t: int = 0, radius: float = 40.0) -> LocationReport:
    """A report whose reported point is exactly (x, y)."""
    center = GeoPoint(x, y)
    fix = LocationFix(reported=center, region=Circle(center, radius), method=LdtMethod.AGPS)
    return LocationReport(msisdn=msisdn, fix=fix, timestamp=t)


@pytest.fixture
def db() -> Database:
    database = Database()
    database.subscribe_user("923000000001", UserClass.GPRS_GPS, {"food"})
    database.register_advertiser(Advertiser(
        advertiser_id="pizza-01",
        secret="s3cret",
        position=GeoPoint(0.0, 0.0),
        service_type="food",
        promo_text="2 for 1 slices",
    ))
    return database


class ScenarioBuilder:
    """Writes a config, snapshot and routes directory under one folder."""

    def __init__(self, root: Path):
        self.root = root
        self.users: List[Dict] = []
        self.advertisers: List[Dict] = []
        self.routes: Dict[str, List[Dict]] = {}
        self.config: Dict = {
            "seed": 7,
            "ticks": 10,
            "base_stations": [{"id": "bs-1", "x": 0.0, "y": 0.0}],
            "lcs_clients": [
                {"client_id": "police", "agreement": True},
                {"client_id": "broker", "agreement": False},
            ],
            "routes_path": "routes",
            "snapshot_path": "snapshot.json",
            "out_dir": "out",
        }

    def user(self, msisdn: str, user_class: str = "GprsGps", services: Sequence[str] = ("food",), app_active: bool = False):
        self.users.append({
            "msisdn": msisdn,
            "user_class": user_class,
            "subscriptions": sorted(services),
            "app_active": app_active,
        })
        return self

    def advertiser(self, advertiser_id: str, x: float, y: float, service: str = "food",
                   promo: str = "promo", limit: Optional[float] = None):
        self.advertisers.append({
            "advertiser_id": advertiser_id,
            "secret": f"{advertiser_id}-secret",
            "position": {"x": x, "y": y},
            "service_type": service,
            "promo_text": promo,
            "trigger_limit": limit,
        })
        return self

    def route(self, msisdn: str, *waypoints):
        self.routes[msisdn] = [{"t": t, "x": x, "y": y} for t, x, y in waypoints]
        return self

    def write(self, **config_overrides) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        routes_dir = self.root / "routes"
        routes_dir.mkdir(exist_ok=True)
        for msisdn, waypoints in self.routes.items():
            (routes_dir / f"{msisdn}.json").write_text(json.dumps({"msisdn": msisdn, "waypoints": waypoints}))
        (self.root / "snapshot.json").write_text(json.dumps({
            "users": self.users,
            "advertisements": self.advertisers,
        }))
        config_path = self.root / "scenario.json"
        config_path.write_text(json.dumps({**self.config, **config_overrides}))
        return config_path


@pytest.fixture
def scenario(tmp_path: Path) -> ScenarioBuilder:
    return ScenarioBuilder(tmp_path / "scenario")


@pytest.fixture
def make_report():
    return circle_report
