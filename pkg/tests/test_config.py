import json

import pytest

from degob.config import ConfigError, GridConfig, RunConfig, check_writable


def test_defaults_valid():
    cfg = RunConfig()
    assert cfg.grid.n == 256 and cfg.grid.omega == "auto"


@pytest.mark.parametrize("n", [64, 128, 256, 512, 1024])
def test_power_of_two_accepted(n):
    assert RunConfig(grid=GridConfig(n=n)).grid.n == n


@pytest.mark.parametrize("n", [32, 100, 2048, 0, 256.0])
def test_bad_n(n):
    with pytest.raises(ConfigError):
        RunConfig(grid=GridConfig(n=n))


@pytest.mark.parametrize(
    "grid",
    [{"tol": 0.0}, {"max_iter": 0}, {"omega": 2.0}, {"omega": "fast"}, {"variant": "plain"}],
)
def test_bad_grid_fields(grid):
    with pytest.raises(ConfigError):
        RunConfig(grid=GridConfig(**grid))


def test_unknown_command():
    with pytest.raises(ConfigError):
        RunConfig(command="plot")


def test_from_dict_flat_and_nested():
    a = RunConfig.from_dict({"n": 128, "tol": 1e-9, "omega": 1.7})
    b = RunConfig.from_dict({"grid": {"n": 128, "tol": 1e-9, "omega": 1.7}})
    assert a.to_dict() == b.to_dict()


def test_from_dict_unknown_key():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"n": 128, "colour": "red"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"grid": {"n": 128, "colour": "red"}})


def test_load_roundtrip(tmp_path):
    cfg = RunConfig(grid=GridConfig(n=64), seed=7)
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert RunConfig.load(str(p)).to_dict() == cfg.to_dict()


def test_load_bad_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{n: 64")
    with pytest.raises(ConfigError):
        RunConfig.load(str(p))
    with pytest.raises(ConfigError):
        RunConfig.load(str(tmp_path / "missing.json"))


def test_unwritable_output(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig(output={"field": str(tmp_path / "no" / "such" / "dir" / "f.csv")})
    check_writable(str(tmp_path / "ok.csv"))
    check_writable(None)
