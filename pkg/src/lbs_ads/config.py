from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .errors import ConfigError, ErrorContext, FileSystemError, InvalidRecord
from .geo import GeoPoint
from .ldt import DEFAULT_SECTOR_WIDTH, TA_BAND_M, BaseStation, check_network
from .protocol import LcsClient
from .trigger import TriggerConfig


DEFAULT_CONFIG: Dict[str, Any] = {
    "seed": 0,
    "ticks": 100,
    "base_stations": [],
    "lcs_clients": [],
    "trigger": {
        "default_limit": 500.0,
        "hysteresis_fraction": 0.10,
        "conservative_mode": False,
        "proximity_threshold": 200.0,
    },
    "ldt": {
        "ta_band": TA_BAND_M,
    },
    "projection": None,  # or {"origin_lat": .., "origin_lon": ..} for lat/lon routes
    "routes_path": "routes",
    "snapshot_path": "snapshot.json",
    "out_dir": "out",
    "logging": {
        "level": "WARNING",
    },
}

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass
class Config:
    data: Dict[str, Any] = field(default_factory=lambda: copy.deepcopy(DEFAULT_CONFIG))
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def load(cls, path: Path) -> "Config":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise FileSystemError(
                f"cannot read config: {exc}", context=ErrorContext(file_path=path), cause=exc
            ) from exc
        except UnicodeDecodeError as exc:
            raise ConfigError(
                f"config is not UTF-8 text (byte {exc.start})", context=ErrorContext(file_path=path), cause=exc
            ) from exc
        try:
            loaded = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError(
                f"config is not valid JSON/YAML: {exc}",
                context=ErrorContext(file_path=path, line_number=mark.line + 1 if mark else None),
                cause=exc,
            ) from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a mapping", context=ErrorContext(file_path=path))
        unknown = set(loaded) - set(DEFAULT_CONFIG)
        if unknown:
            raise ConfigError(
                f"unknown config keys: {', '.join(sorted(unknown))}",
                context=ErrorContext(file_path=path, field_path=sorted(unknown)[0]),
            )
        return cls(merge_dicts(DEFAULT_CONFIG, loaded), base_dir=path.resolve().parent)

    def get(self, dotted_key: str, default: Any = None) -> Any:
        node = self.data
        for part in dotted_key.split('.'):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def set(self, dotted_key: str, value: Any) -> None:
        node = self.data
        parts = dotted_key.split('.')
        if parts[0] not in DEFAULT_CONFIG:
            raise ConfigError(f"unknown config key: {parts[0]}", context=ErrorContext(field_path=parts[0]))
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = coerce_value(value)

    def resolve_path(self, dotted_key: str) -> Path:
        path = Path(str(self.get(dotted_key)))
        return path if path.is_absolute() else self.base_dir / path


def merge_dicts(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    result = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            result[key] = merge_dicts(base[key], value)
        else:
            result[key] = value
    return result


def coerce_value(value: Any) -> Any:
    if isinstance(value, str):
        lowered = value.lower()
        if lowered in {"true", "false"}:
            return lowered == "true"
        if lowered in {"null", "none"}:
            return None
        try:
            if "." in value:
                return float(value)
            return int(value)
        except ValueError:
            return value
    return value


@dataclass(frozen=True)
class SimConfig:
    """Fully validated scenario description."""
    seed: int
    ticks: int
    base_stations: Tuple[BaseStation, ...]
    lcs_clients: Tuple[LcsClient, ...]
    trigger: TriggerConfig
    routes_path: Path
    snapshot_path: Path
    out_dir: Path
    ta_band: float = TA_BAND_M
    projection: Optional[Tuple[float, float]] = None
    log_level: str = "WARNING"

    @classmethod
    def from_config(cls, cfg: Config, source: Optional[Path] = None) -> "SimConfig":
        reader = _FieldReader(source)
        seed = reader.integer(cfg.get("seed"), "seed")
        ticks = reader.integer(cfg.get("ticks"), "ticks")
        if ticks < 1:
            raise reader.fail("ticks", "must be >= 1")

        stations = [reader.base_station(raw, f"base_stations[{i}]") for i, raw in enumerate(reader.items(cfg.get("base_stations"), "base_stations"))]
        try:
            check_network(stations)
        except InvalidRecord as exc:
            raise reader.fail("base_stations", exc.message) from exc

        clients = [reader.lcs_client(raw, f"lcs_clients[{i}]") for i, raw in enumerate(reader.items(cfg.get("lcs_clients"), "lcs_clients"))]
        if len({c.client_id for c in clients}) != len(clients):
            raise reader.fail("lcs_clients", "client ids must be unique")

        trigger_raw = reader.mapping(cfg.get("trigger"), "trigger", set(DEFAULT_CONFIG["trigger"]))
        try:
            trigger = TriggerConfig(
                default_limit=reader.number(trigger_raw["default_limit"], "trigger.default_limit"),
                hysteresis_fraction=reader.number(trigger_raw["hysteresis_fraction"], "trigger.hysteresis_fraction"),
                conservative_mode=reader.boolean(trigger_raw["conservative_mode"], "trigger.conservative_mode"),
                proximity_threshold=reader.number(trigger_raw["proximity_threshold"], "trigger.proximity_threshold"),
            )
        except InvalidRecord as exc:
            raise reader.fail("trigger", exc.message) from exc

        ldt_raw = reader.mapping(cfg.get("ldt"), "ldt", set(DEFAULT_CONFIG["ldt"]))
        ta_band = reader.number(ldt_raw["ta_band"], "ldt.ta_band")
        if ta_band <= 0:
            raise reader.fail("ldt.ta_band", "must be > 0")

        projection = None
        if cfg.get("projection") is not None:
            proj = reader.mapping(cfg.get("projection"), "projection", {"origin_lat", "origin_lon"}, required=True)
            projection = (
                reader.number(proj["origin_lat"], "projection.origin_lat"),
                reader.number(proj["origin_lon"], "projection.origin_lon"),
            )

        logging_raw = reader.mapping(cfg.get("logging"), "logging", set(DEFAULT_CONFIG["logging"]))
        log_level = reader.string(logging_raw.get("level", "WARNING"), "logging.level").upper()
        if log_level not in LOG_LEVELS:
            raise reader.fail("logging.level", f"expected one of {', '.join(LOG_LEVELS)}")

        return cls(
            seed=seed,
            ticks=ticks,
            base_stations=tuple(stations),
            lcs_clients=tuple(clients),
            trigger=trigger,
            routes_path=cfg.resolve_path("routes_path"),
            snapshot_path=cfg.resolve_path("snapshot_path"),
            out_dir=cfg.resolve_path("out_dir"),
            ta_band=ta_band,
            projection=projection,
            log_level=log_level,
        )


def load_sim_config(path: Path, overrides: Optional[Dict[str, Any]] = None) -> SimConfig:
    """Read a scenario file, apply dotted-key overrides and validate it."""
    cfg = Config.load(path)
    for key, value in (overrides or {}).items():
        cfg.set(key, value)
    return SimConfig.from_config(cfg, source=Path(path))


class _FieldReader:
    def __init__(self, source: Optional[Path]):
        self.source = source

    def fail(self, field_path: str, message: str) -> ConfigError:
        return ConfigError(f"{field_path}: {message}", context=ErrorContext(file_path=self.source, field_path=field_path))

    def integer(self, value: Any, field_path: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.fail(field_path, "expected an integer")
        return value

    def number(self, value: Any, field_path: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(field_path, "expected a number")
        return float(value)

    def boolean(self, value: Any, field_path: str) -> bool:
        if not isinstance(value, bool):
            raise self.fail(field_path, "expected true or false")
        return value

    def string(self, value: Any, field_path: str) -> str:
        if not isinstance(value, str) or not value:
            raise self.fail(field_path, "expected a non-empty string")
        return value

    def items(self, value: Any, field_path: str) -> List[Any]:
        if not isinstance(value, list):
            raise self.fail(field_path, "expected a list")
        return value

    def mapping(self, value: Any, field_path: str, allowed: set, required: bool = False) -> Dict[str, Any]:
        if not isinstance(value, dict):
            raise self.fail(field_path, "expected a mapping")
        unknown = set(value) - allowed
        if unknown:
            raise self.fail(field_path, f"unknown keys {sorted(unknown)}")
        if required and allowed - set(value):
            raise self.fail(field_path, f"missing keys {sorted(allowed - set(value))}")
        return value

    def base_station(self, raw: Any, field_path: str) -> BaseStation:
        data = self.mapping(raw, field_path, {"id", "x", "y", "sector_width"})
        for key in ("id", "x", "y"):
            if key not in data:
                raise self.fail(f"{field_path}.{key}", "is required")
        try:
            return BaseStation(
                id=self.string(data["id"], f"{field_path}.id"),
                position=GeoPoint(self.number(data["x"], f"{field_path}.x"), self.number(data["y"], f"{field_path}.y")),
                sector_width=self.number(data.get("sector_width", DEFAULT_SECTOR_WIDTH), f"{field_path}.sector_width"),
            )
        except InvalidRecord as exc:
            raise self.fail(field_path, exc.message) from exc

    def lcs_client(self, raw: Any, field_path: str) -> LcsClient:
        data = self.mapping(raw, field_path, {"client_id", "agreement"}, required=True)
        return LcsClient(
            client_id=self.string(data["client_id"], f"{field_path}.client_id"),
            agreement=self.boolean(data["agreement"], f"{field_path}.agreement"),
        )
