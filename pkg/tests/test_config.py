import json

import pytest

from caisim.config import (ConfigError, ExperimentConfig, dump, from_dict,
                           load)


def test_defaults_validate():
    cfg = ExperimentConfig()
    cfg.validate()
    assert cfg.effective_disrupt_start == cfg.steady_len
    assert cfg.effective_stop_support == cfg.m
    assert cfg.iteration_budget == 600


@pytest.mark.parametrize("overrides,field", [
    ({"m": 0}, "m"),
    ({"steady_len": 2, "m": 5}, "steady_len"),
    ({"policy": "magic"}, "policy"),
    ({"cycles": 0}, "cycles"),
    ({"satisfactory": 0.0}, "satisfactory"),
    ({"disrupt_start": 10}, "disrupt_start"),
    ({"fix_at": 10}, "fix_at"),
    ({"pace_hz": -1}, "pace_hz"),
    ({"disruptor": {"kind": "fog"}}, "disruptor.kind"),
    ({"disruptor": {"kind": "darkness", "factor": 0.0}}, "disruptor.factor"),
])
def test_validation_names_offending_field(overrides, field):
    cfg_doc = ExperimentConfig().to_dict()
    cfg_doc.update(overrides)
    with pytest.raises(ConfigError) as err:
        from_dict(cfg_doc)
    assert err.value.field == field


def test_nested_validation():
    doc = ExperimentConfig().to_dict()
    doc["policy_params"]["rl_alpha"] = 0.0
    with pytest.raises(ConfigError) as err:
        from_dict(doc)
    assert err.value.field == "policy_params.rl_alpha"


def test_unknown_fields_rejected():
    doc = ExperimentConfig().to_dict()
    doc["tempo"] = 3
    with pytest.raises(ConfigError) as err:
        from_dict(doc)
    assert err.value.field == "tempo"
    doc = ExperimentConfig().to_dict()
    doc["learner"]["momentum"] = 0.9
    with pytest.raises(ConfigError) as err:
        from_dict(doc)
    assert err.value.field == "learner.momentum"


def test_round_trip():
    cfg = ExperimentConfig(seed=7, policy="two-agent", cycles=2,
                           disruptor={"kind": "histogram_equalization"})
    doc = cfg.to_dict()
    assert doc["schema_version"] == 1
    again = from_dict(json.loads(json.dumps(doc)))
    assert again == cfg


def test_schema_version_checked():
    doc = ExperimentConfig().to_dict()
    doc["schema_version"] = 99
    with pytest.raises(ConfigError) as err:
        from_dict(doc)
    assert err.value.field == "schema_version"


def test_partial_document_uses_defaults():
    cfg = from_dict({"seed": 5, "policy": "rl-agent"})
    assert cfg.seed == 5
    assert cfg.policy == "rl-agent"
    assert cfg.m == 5
    assert cfg.learner.learning_rate == pytest.approx(0.07)


def test_file_round_trip(tmp_path):
    cfg = ExperimentConfig(seed=123)
    path = tmp_path / "config.json"
    dump(cfg, path)
    assert load(path) == cfg
