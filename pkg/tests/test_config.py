from __future__ import annotations

import json
from pathlib import Path

import pytest

from src.config import (
    GridRange,
    apply_overrides,
    config_hash,
    dump_config,
    load_config,
    load_experiment,
    parse_config,
)
from src.errors import ConfigError


CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("path", sorted(CONFIGS.rglob("*.yaml")), ids=lambda p: p.name)
def test_shipped_configs_validate(path):
    config = load_experiment(path)
    assert config.grid.sizes()
    assert len(config_hash(config)) == 12


def test_runtime_defaults():
    config = load_experiment(CONFIGS / "runtime.yaml")
    assert config.grid.sizes() == [8]
    assert config.lA_for(8) == 4
    assert config.protocol.n_st is None
    assert config.analysis.crossing_pair() == ["L8-32", "L24-64"]


def test_grid_range_is_inclusive_and_rounded():
    values = GridRange(start=0.0, stop=1.0, step=0.1).values()
    assert len(values) == 11
    assert values[3] == 0.3
    assert values[-1] == 1.0
    assert GridRange(start=0.5, stop=0.5, step=0.1).values() == [0.5]
    with pytest.raises(ValueError):
        GridRange(start=1.0, stop=0.0, step=0.1)


@pytest.mark.parametrize(
    "raw, key",
    [
        ({"grid": {"p1": [0.1, 1.2]}}, "grid.p1"),
        ({"grid": {"p2": {"start": 0.0, "stop": 1.5, "step": 0.5}}}, "grid.p2"),
        ({"grid": {"L": [16, 7]}}, "grid.L"),
        ({"protocol": {"bogus": 1}}, "protocol.bogus"),
        ({"protocol": {"n_traj": 0}}, "protocol.n_traj"),
        ({"protocol": {"n_jobs": 0}}, "protocol.n_jobs"),
        ({"analysis": {"windows": ["L4-12"]}}, "analysis.windows"),
        ({"analysis": {"crossing_windows": ["L8-32"]}}, "analysis.crossing_windows"),
        ({"analysis": {"extrapolation_windows": ["L24-64", "L8-64"]}}, "analysis.extrapolation_windows"),
        ({"analysis": {"collapse_windows": ["L8-32", "L24-64", "L8-64"]}}, "analysis.collapse_windows"),
        ({"model": {"tau_u": -1.0}}, "model.tau_u"),
        ({"grid": {"L": [8, 16]}, "protocol": {"lA": 8}}, "protocol.lA"),
    ],
)
def test_invalid_values_name_the_dotted_key(raw, key):
    with pytest.raises(ConfigError) as info:
        parse_config(raw)
    assert info.value.key == key
    assert str(info.value).startswith(key)


def test_overrides_parse_values_and_leave_input_untouched():
    raw = {"grid": {"L": [8]}}
    updated = apply_overrides(raw, ["grid.L=[16, 32]", "protocol.n_traj=3", "output.directory=/tmp/x"])
    assert raw == {"grid": {"L": [8]}}
    config = parse_config(updated)
    assert config.grid.sizes() == [16, 32]
    assert config.protocol.n_traj == 3
    assert config.output.directory == "/tmp/x"


def test_malformed_override_raises():
    with pytest.raises(ConfigError):
        apply_overrides({}, ["protocol.n_traj"])
    with pytest.raises(ConfigError):
        apply_overrides({"grid": {"L": [8]}}, ["grid.L.x=1"])


def test_hash_depends_only_on_content():
    a = parse_config({"grid": {"L": [8]}, "protocol": {"master_seed": 1}})
    b = parse_config({"protocol": {"master_seed": 1}, "grid": {"L": [8]}})
    c = parse_config({"grid": {"L": [8]}, "protocol": {"master_seed": 2}})
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)


def test_dumped_config_reloads_to_same_hash(tmp_path):
    config = load_experiment(CONFIGS / "sweeps" / "scaling_desk.yaml")
    path = dump_config(config, tmp_path / "config.yaml")
    assert config_hash(load_experiment(path)) == config_hash(config)


def test_json_configs_and_bad_files(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"grid": {"L": [4]}}), encoding="utf-8")
    assert load_experiment(path).grid.sizes() == [4]

    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(listing)
    toml = tmp_path / "run.toml"
    toml.write_text("[grid]\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_config(toml)
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.yaml")


def test_extrapolation_and_collapse_window_sets():
    config = load_experiment(CONFIGS / "sweeps" / "scaling_desk.yaml")
    assert config.analysis.collapse_set() == ["L8-32", "L16-48", "L24-64"]
    assert config.analysis.extrapolation_set() == ["L8-32", "L16-48", "L24-64"]
    defaults = parse_config({"analysis": {"windows": ["L8-32", "L16-48"]}})
    assert defaults.analysis.extrapolation_set() == ["L8-32", "L16-48"]
