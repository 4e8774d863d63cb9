"""Tests for configuration files and experiment specs."""

import logging
from pathlib import Path

import pytest
import yaml

from tbs_noma.config import Config, ExperimentSpec
from tbs_noma.errors import ConfigurationError


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return str(path)


def test_defaults():
    config = Config()
    assert config.config_path is None
    assert config.get('network', 'mode') == 1
    assert config.get('network', 'relay_power_ratio') == 0.5
    assert config.get('simulation', 'target_errors') == 2000
    assert config.get('output', 'path') == 'results.csv'


def test_defaults_are_not_shared():
    first = Config()
    first.set('network', 'a1', 0.3)
    assert Config().get('network', 'a1') == 0.1
    assert Config.DEFAULT_CONFIG['network']['a1'] == 0.1


def test_load_merges_over_defaults(tmp_path):
    path = write_yaml(tmp_path / "exp.yaml", {'network': {'mode': 3, 'a1': 0.2},
                                             'sweep': {'snr_stop': 40}})
    config = Config(path)
    assert config.get('network', 'mode') == 3
    assert config.get('network', 'a1') == 0.2
    assert config.get('sweep', 'snr_stop') == 40
    assert config.get('sweep', 'snr_step') == 5.0


def test_unknown_keys_are_ignored(tmp_path, caplog):
    path = write_yaml(tmp_path / "exp.yaml", {'network': {'colour': 'blue'}, 'plots': {}})
    with caplog.at_level(logging.WARNING):
        config = Config(path)
    assert config.get('network', 'colour') is None
    assert "network.colour" in caplog.text
    assert "plots" in caplog.text


def test_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        Config(str(tmp_path / "missing.yaml"))


@pytest.mark.parametrize("text", ["network: [1, 2", "- just\n- a list\n", "network: 3\n"])
def test_malformed_file(tmp_path, text):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ConfigurationError):
        Config(str(path))


def test_save_round_trip(tmp_path):
    config = Config()
    config.update({'network': {'mode': 5}, 'simulation': {'seed': 7}})
    saved = config.save(str(tmp_path / "nested" / "out.yaml"))
    reloaded = Config(str(saved))
    assert reloaded.config == config.config


def test_set_unknown_key():
    with pytest.raises(ConfigurationError):
        Config().set('network', 'nope', 1)


def test_update_rejects_unknown_key():
    config = Config()
    with pytest.raises(ConfigurationError):
        config.update({'sweep': {'snr_step': 1.0, 'snr_count': 3}})


def test_spec_from_config_with_overrides(tmp_path):
    path = write_yaml(tmp_path / "exp.yaml", {'network': {'mode': 3, 'a1': 0.2}})
    spec = ExperimentSpec.from_config(Config(path), {'a1': 0.25, 'seed': None,
                                                      'output': Path('x.csv')})
    assert spec.mode_id == 3
    assert spec.a1 == 0.25
    assert spec.a2 == pytest.approx(0.75)
    assert spec.seed == 2019
    assert spec.output == Path('x.csv')


def test_spec_unknown_override():
    with pytest.raises(ConfigurationError):
        ExperimentSpec.from_config(Config(), {'colour': 'blue'})


def test_spec_bad_value_type(tmp_path):
    path = write_yaml(tmp_path / "exp.yaml", {'network': {'a1': 'lots'}})
    with pytest.raises(ConfigurationError):
        ExperimentSpec.from_config(Config(path))


@pytest.mark.parametrize("kwargs", [
    dict(a1=0.5), dict(a1=0.0), dict(snr_step=0.0), dict(snr_start=10.0, snr_stop=0.0),
    dict(mode_id=7), dict(policy='sometimes'), dict(target_errors=50), dict(workers=0),
    dict(relay_power_ratio=0.0), dict(seed=-1), dict(grid_steps=2),
])
def test_spec_validation(kwargs):
    with pytest.raises(ConfigurationError):
        ExperimentSpec(**kwargs)


def test_snr_points():
    assert ExperimentSpec().snr_points() == [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
    assert ExperimentSpec(snr_start=0, snr_stop=10, snr_step=3).snr_points() == [0.0, 3.0, 6.0, 9.0]
    assert ExperimentSpec(snr_start=12, snr_stop=12).snr_points() == [12.0]
    assert ExperimentSpec(snr_start=0, snr_stop=1, snr_step=0.1).snr_points()[-1] == 1.0


def test_network_config():
    spec = ExperimentSpec(a1=0.2, sigma2_s1_db=10.0, relay_power_ratio=0.25)
    config = spec.network_config(20.0)
    assert config.rho == pytest.approx(100.0)
    assert config.gamma_s1 == pytest.approx(1000.0)
    assert config.pr == pytest.approx(25.0)
    assert config.a2 == pytest.approx(0.8)


def test_describe_carries_seed_and_policy():
    lines = ExperimentSpec(seed=42, policy='optimum').describe()
    assert "seed: 42" in lines
    assert "policy: optimum" in lines
    assert "a1: 0.1" in lines


def test_to_config_round_trip(tmp_path):
    spec = ExperimentSpec(mode_id=4, a1=0.15, snr_stop=20.0, policy='always', seed=9,
                          output=Path('out/run.csv'))
    path = spec.to_config().save(str(tmp_path / "spec.yaml"))
    assert ExperimentSpec.from_config(Config(str(path))) == spec
