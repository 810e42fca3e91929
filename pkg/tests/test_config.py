"""配置分层合成与种子解析"""
import orjson
import pytest

from edaffect.config import ConfigManager, RunConfig, resolve_seed
from edaffect.config.config_manager import SEED_ENV, read_json_config
from edaffect.core.errors import BadParams, ConfigError, IoError


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)


def _write(path, payload):
    path.write_bytes(orjson.dumps(payload))
    return path


def test_defaults():
    run = ConfigManager().build()
    assert run == RunConfig()
    assert run.seed == 0


@pytest.mark.parametrize("name", ["large-scale", "small-scale", "smoke"])
def test_presets_build(name):
    manager = ConfigManager()
    assert name in manager.profile_names()
    run = manager.build(profile=name)
    assert run.profile == name


def test_profile_switches():
    manager = ConfigManager()
    assert manager.build(profile="large-scale").rtcan.sca_in_resblock
    assert manager.build(profile="large-scale").pipeline.use_music
    assert not manager.build(profile="small-scale").rtcan.sca_in_resblock


def test_profiles_share_network_width():
    manager = ConfigManager()
    eda = manager.build(profile="small-scale")
    fused = manager.build(profile="large-scale")
    assert eda.rtcan.input_len == fused.rtcan.input_len == 300
    assert eda.rtcan.rfe_channels == fused.rtcan.rfe_channels
    assert eda.rtcan.stem_len == 150
    # 学习率衰减与 epoch 数沿用默认值
    assert eda.schedule.epochs == fused.schedule.epochs == 60
    assert eda.schedule.decay == 0.9 and eda.schedule.decay_every == 15


def test_precedence(tmp_path):
    manager = ConfigManager()
    path = _write(tmp_path / "run.json", {"schedule": {"epochs": 7}})
    assert manager.build().schedule.epochs == 60
    assert manager.build(profile="smoke").schedule.epochs == 15
    assert manager.build(profile="smoke", config_path=path).schedule.epochs == 7
    run = manager.build(profile="smoke", config_path=path,
                        overrides={"schedule": {"epochs": 3, "lr0": None}})
    assert run.schedule.epochs == 3
    assert run.schedule.lr0 == 0.05


def test_base_layer_is_lowest(tmp_path):
    manager = ConfigManager()
    run = manager.build(profile="smoke", base={"cvxeda": {"alpha": 0.5, "max_iter": 10}})
    assert run.cvxeda.alpha == 0.5
    assert run.cvxeda.max_iter == 3000


def test_partial_synth_spec_keeps_defaults():
    run = ConfigManager().build(overrides={"synth": {"high": {"duration_s": 30.0},
                                                     "low": {"duration_s": 30.0}}})
    assert run.synth.high.scr_rate_hz == 0.25
    assert run.synth.low.scr_rate_hz == 0.05
    assert run.synth.high.duration_s == 30.0


@pytest.mark.parametrize("layer", [
    {"bogus": {}},
    {"rtcan": {"depth": 3}},
    {"synth": {"low": {"rate": 1.0}}},
    {"schedule": {"epochs": "many"}},
    {"schedule": 5},
])
def test_bad_layers(tmp_path, layer):
    with pytest.raises(ConfigError):
        ConfigManager().build(config_path=_write(tmp_path / "bad.json", layer))


def test_bad_values_keep_their_reason():
    with pytest.raises(BadParams):
        ConfigManager().build(overrides={"schedule": {"lr0": -1.0}})


def test_unknown_profile():
    with pytest.raises(ConfigError):
        ConfigManager().build(profile="huge")


def test_seed_resolution(monkeypatch):
    run = ConfigManager().build(seed=7)
    assert (run.schedule.seed, run.svm.seed, run.synth.seed) == (7, 7, 7)

    monkeypatch.setenv(SEED_ENV, "11")
    assert resolve_seed(None) == 11
    assert ConfigManager().build().seed == 11
    assert ConfigManager().build(seed=3).seed == 3

    monkeypatch.setenv(SEED_ENV, "abc")
    with pytest.raises(ConfigError):
        resolve_seed(None)


def test_to_dict_rebuilds_same_config():
    run = ConfigManager().build(profile="smoke")
    rebuilt = ConfigManager().build(overrides=run.to_dict())
    assert rebuilt == RunConfig(**{**run.__dict__, "profile": None})


def test_read_json_config_errors(tmp_path):
    with pytest.raises(IoError):
        read_json_config(tmp_path / "missing.json")
    (tmp_path / "broken.json").write_text("{")
    with pytest.raises(ConfigError):
        read_json_config(tmp_path / "broken.json")
    (tmp_path / "list.json").write_text("[1, 2]")
    with pytest.raises(ConfigError):
        read_json_config(tmp_path / "list.json")
