from __future__ import annotations

import json
from pathlib import Path

import pytest

from lbs_ads.config import Config, SimConfig, coerce_value, load_sim_config, merge_dicts
from lbs_ads.errors import ConfigError, FileSystemError
from lbs_ads.geo import GeoPoint


def write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data))
    return path


class TestConfig:
    """Layered scenario configuration."""

    def test_defaults_applied(self, tmp_path: Path):
        cfg = Config.load(write_json(tmp_path / "s.json", {"seed": 3}))
        assert cfg.get("seed") == 3
        assert cfg.get("ticks") == 100
        assert cfg.get("trigger.default_limit") == 500.0

    def test_yaml_accepted(self, tmp_path: Path):
        path = tmp_path / "s.yaml"
        path.write_text("seed: 11\ntrigger:\n  hysteresis_fraction: 0.2\n")
        cfg = Config.load(path)
        assert cfg.get("trigger.hysteresis_fraction") == 0.2
        assert cfg.get("trigger.proximity_threshold") == 200.0

    def test_unknown_key(self, tmp_path: Path):
        with pytest.raises(ConfigError) as info:
            Config.load(write_json(tmp_path / "s.json", {"seeds": 1}))
        assert info.value.context.field_path == "seeds"

    def test_syntax_error_reports_line(self, tmp_path: Path):
        path = tmp_path / "s.yaml"
        path.write_text("seed: 1\ntrigger: [unclosed\n")
        with pytest.raises(ConfigError) as info:
            Config.load(path)
        assert info.value.context.line_number is not None

    def test_not_utf8(self, tmp_path: Path):
        path = tmp_path / "s.yaml"
        path.write_bytes(b"seed: 1\nnote: \xff\n")
        with pytest.raises(ConfigError, match="UTF-8"):
            Config.load(path)

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(FileSystemError):
            Config.load(tmp_path / "absent.json")

    def test_dotted_set_and_get(self):
        cfg = Config()
        cfg.set("trigger.conservative_mode", "true")
        cfg.set("ticks", "25")
        assert cfg.get("trigger.conservative_mode") is True
        assert cfg.get("ticks") == 25
        assert cfg.get("trigger.nothing", "fallback") == "fallback"

    def test_set_rejects_unknown_top_level_key(self):
        cfg = Config()
        with pytest.raises(ConfigError) as info:
            cfg.set("foo", "1")
        assert info.value.context.field_path == "foo"
        assert "foo" not in cfg.data

    def test_paths_resolve_against_config_dir(self, tmp_path: Path):
        cfg = Config.load(write_json(tmp_path / "s.json", {"routes_path": "r", "out_dir": str(tmp_path / "abs")}))
        assert cfg.resolve_path("routes_path") == tmp_path.resolve() / "r"
        assert cfg.resolve_path("out_dir") == tmp_path / "abs"


class TestHelpers:
    def test_merge_does_not_mutate(self):
        base = {"a": {"b": 1, "c": 2}}
        merged = merge_dicts(base, {"a": {"b": 5}})
        assert merged == {"a": {"b": 5, "c": 2}}
        assert base == {"a": {"b": 1, "c": 2}}

    @pytest.mark.parametrize("raw, expected", [
        ("false", False), ("null", None), ("42", 42), ("0.5", 0.5), ("bs-1", "bs-1"), (7, 7),
    ])
    def test_coerce(self, raw, expected):
        assert coerce_value(raw) == expected


class TestSimConfig:
    def _write(self, tmp_path: Path, **data) -> Path:
        return write_json(tmp_path / "scenario.json", data)

    def test_full_scenario(self, tmp_path: Path):
        path = self._write(
            tmp_path,
            seed=7,
            ticks=20,
            base_stations=[{"id": "bs-1", "x": 0, "y": 0}, {"id": "bs-2", "x": 500, "y": 0, "sector_width": 90}],
            lcs_clients=[{"client_id": "police", "agreement": True}],
            trigger={"default_limit": 300},
            projection={"origin_lat": 33.7, "origin_lon": 73.0},
        )
        sim = load_sim_config(path)
        assert (sim.seed, sim.ticks) == (7, 20)
        assert [b.id for b in sim.base_stations] == ["bs-1", "bs-2"]
        assert sim.base_stations[1].position == GeoPoint(500.0, 0.0)
        assert sim.base_stations[1].sector_width == 90.0
        assert sim.lcs_clients[0].agreement is True
        assert sim.trigger.default_limit == 300.0
        assert sim.projection == (33.7, 73.0)
        assert sim.snapshot_path == tmp_path.resolve() / "snapshot.json"

    def test_overrides(self, tmp_path: Path):
        sim = load_sim_config(self._write(tmp_path), {"seed": "99", "trigger.conservative_mode": "true"})
        assert sim.seed == 99
        assert sim.trigger.conservative_mode is True

    def test_log_level_normalized(self, tmp_path: Path):
        assert load_sim_config(self._write(tmp_path, logging={"level": "debug"})).log_level == "DEBUG"
        assert load_sim_config(self._write(tmp_path)).log_level == "WARNING"

    def test_unknown_override_key(self, tmp_path: Path):
        with pytest.raises(ConfigError) as info:
            load_sim_config(self._write(tmp_path), {"foo": "1"})
        assert info.value.context.field_path == "foo"

    @pytest.mark.parametrize("data, field_path", [
        ({"ticks": 0}, "ticks"),
        ({"seed": "abc"}, "seed"),
        ({"base_stations": [{"id": "a", "x": 0}]}, "base_stations[0].y"),
        ({"base_stations": [{"id": "a", "x": 0, "y": 0}, {"id": "a", "x": 1, "y": 1}]}, "base_stations"),
        ({"base_stations": [{"id": "a", "x": 0, "y": 0, "sector_width": 400}]}, "base_stations[0]"),
        ({"lcs_clients": [{"client_id": "c", "agreement": "yes"}]}, "lcs_clients[0].agreement"),
        ({"trigger": {"hysteresis_fraction": 1.5}}, "trigger"),
        ({"trigger": {"radius": 3}}, "trigger"),
        ({"ldt": {"ta_band": 0}}, "ldt.ta_band"),
        ({"projection": {"origin_lat": 1.0}}, "projection"),
        ({"logging": {"level": "loud"}}, "logging.level"),
        ({"logging": {"level": 10}}, "logging.level"),
        ({"logging": {"format": "json"}}, "logging"),
    ])
    def test_invalid_fields(self, tmp_path: Path, data, field_path):
        with pytest.raises(ConfigError) as info:
            SimConfig.from_config(Config.load(self._write(tmp_path, **data)))
        assert info.value.context.field_path == field_path
