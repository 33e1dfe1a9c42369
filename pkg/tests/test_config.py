"""JSON config loading: defaults round trip, strict typing, key suggestions."""

import json

import pytest

from dualtherm.config import (
    ConfigError,
    default_config_dict,
    load_config,
    scenario_config_from_dict,
)
from dualtherm.scenarios import ScenarioConfig, ScenarioKind


ALL_KINDS = ("ramp", "precision_sweep", "bfield_artifact", "laser_modulation")


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_default_dict_round_trips_to_default_config(kind):
    config = scenario_config_from_dict(default_config_dict(kind))
    assert config == ScenarioConfig(kind=ScenarioKind(kind))


def test_load_config_reads_json_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(default_config_dict("ramp")), encoding="utf-8")
    assert load_config(path) == ScenarioConfig(kind=ScenarioKind.RAMP)


def test_partial_config_keeps_defaults_elsewhere():
    config = scenario_config_from_dict(
        {"kind": "ramp", "seed": 99, "odmr": {"contrast": 0.2}}
    )
    assert config.seed == 99
    assert config.odmr.contrast == 0.2
    # untouched sections and fields stay at their dataclass defaults
    assert config.odmr.baseline_rate_cps == 5e8
    assert config.pl == ScenarioConfig().pl


def test_unknown_top_level_key_gets_a_suggestion():
    with pytest.raises(ConfigError, match=r"unknown key durations_s.*did you mean 'duration_s'"):
        scenario_config_from_dict({"kind": "ramp", "durations_s": 60})


def test_unknown_section_key_gets_a_suggestion():
    with pytest.raises(
        ConfigError, match=r"unknown key odmr\.baseline_rate.*did you mean 'baseline_rate_cps'"
    ):
        scenario_config_from_dict({"odmr": {"baseline_rate": 1e8}})


def test_unknown_kind_lists_valid_values():
    with pytest.raises(ConfigError, match=r"'rampp' is not one of.*ramp"):
        scenario_config_from_dict({"kind": "rampp"})
    with pytest.raises(ConfigError, match="kind: expected a string"):
        scenario_config_from_dict({"kind": 3})


def test_booleans_are_not_accepted_as_numbers():
    with pytest.raises(ConfigError, match="seed: expected an integer"):
        scenario_config_from_dict({"seed": True})
    with pytest.raises(ConfigError, match="duration_s: expected a number"):
        scenario_config_from_dict({"duration_s": True})
    with pytest.raises(ConfigError, match=r"odmr\.sweep_points: expected an integer"):
        scenario_config_from_dict({"odmr": {"sweep_points": True}})


def test_numbers_are_not_accepted_as_booleans():
    with pytest.raises(ConfigError, match="noiseless: expected true/false"):
        scenario_config_from_dict({"noiseless": 1})


def test_strings_are_not_accepted_as_numbers():
    with pytest.raises(ConfigError, match="duration_s: expected a number"):
        scenario_config_from_dict({"duration_s": "60"})
    with pytest.raises(ConfigError, match=r"odmr\.contrast: expected a number"):
        scenario_config_from_dict({"odmr": {"contrast": "0.1"}})


def test_float_fields_accept_json_integers():
    config = scenario_config_from_dict({"duration_s": 60, "odmr": {"linewidth_mhz": 14}})
    assert config.duration_s == 60.0
    assert isinstance(config.duration_s, float)
    assert config.odmr.linewidth_mhz == 14.0
    assert isinstance(config.odmr.linewidth_mhz, float)


def test_tuple_of_floats_coerces_from_json_list():
    config = scenario_config_from_dict(
        {"precision": {"integration_times_s": [1, 3.0], "repetitions": 2}}
    )
    assert config.precision.integration_times_s == (1.0, 3.0)
    assert all(isinstance(v, float) for v in config.precision.integration_times_s)


def test_tuple_of_strings_coerces_from_json_list():
    config = scenario_config_from_dict({"precision": {"channels": ["nv", "siv"]}})
    assert config.precision.channels == ("nv", "siv")


def test_tuple_fields_reject_scalars_and_mixed_lists():
    with pytest.raises(ConfigError, match="expected a list of numbers"):
        scenario_config_from_dict({"precision": {"integration_times_s": 1.0}})
    with pytest.raises(ConfigError, match="expected a list of numbers"):
        scenario_config_from_dict({"precision": {"integration_times_s": [1.0, "x"]}})
    with pytest.raises(ConfigError, match="expected a list of strings"):
        scenario_config_from_dict({"precision": {"channels": [1, 2]}})


def test_section_must_be_an_object():
    with pytest.raises(ConfigError, match="odmr: expected an object"):
        scenario_config_from_dict({"odmr": 5})


def test_top_level_must_be_an_object():
    with pytest.raises(ConfigError, match="top level: expected an object"):
        scenario_config_from_dict([1, 2, 3])


def test_invariant_violations_name_the_section():
    with pytest.raises(ConfigError, match="ramp: n_steps must be an integer >= 1"):
        scenario_config_from_dict({"ramp": {"n_steps": 0}})
    with pytest.raises(ConfigError, match=r"odmr: contrast must lie in \(0, 1\)"):
        scenario_config_from_dict({"odmr": {"contrast": 1.5}})


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "absent.json")


def test_load_config_rejects_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(path)
