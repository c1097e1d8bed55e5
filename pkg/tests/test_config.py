import json

import pytest

from spikeprune.engine.config import SEED_ENV, config_from_dict, load_config, fingerprint
from spikeprune.errors import ConfigError
from spikeprune.snnapi.enums import ResetMode, ScorerKind
from spikeprune.snnapi.models import RunConfig
from spikeprune.snnapi.trans import (
    parse_schedule, pruning_rate_to_retention, retention_to_pruning_rate, schedule_from_pruning_rates
)


def _key_of(data, env=None):
    with pytest.raises(ConfigError) as info:
        config_from_dict(data, env or {})
    return info.value.key


def test_defaults_match_dataclasses():
    config = config_from_dict({}, env={})
    assert config.to_dict() == RunConfig().to_dict()
    assert config.schedule is None
    assert config.neuron.reset_mode == ResetMode.HARD
    assert config.scorer.kind == ScorerKind.IRTOP


def test_partial_sections_are_filled():
    config = config_from_dict({"model": {"num_blocks": 3}, "schedule": {"ratios": [1, 0.9, 0.81]},
                               "energy": {"e_mac": 5}}, env={})
    assert config.model.num_blocks == 3
    assert config.model.embed_dim == 32
    assert config.schedule.ratios == [1.0, 0.9, 0.81]
    assert config.energy.e_mac == 5.0


@pytest.mark.parametrize("data, key", [
    ({"model": {"foo": 1}}, "model.foo"),
    ({"bogus": {}}, "bogus"),
    ({"model": {"time_steps": "4"}}, "model.time_steps"),
    ({"train": {"epochs": True}}, "train.epochs"),
    ({"neuron": {"reset_mode": "medium"}}, "neuron.reset_mode"),
    ({"search": {"candidate_ratios": [1.0, "x"]}}, "search.candidate_ratios"),
    ({"model": []}, "model"),
    ({"schedule": "half"}, "schedule"),
    ({"schedule": [1.0]}, "schedule"),
    ({"schedule": [1.0, 1.5]}, "schedule[1]"),
    ({"train": {"schedule": [0.5]}}, "train.schedule"),
    ({"train": {"prune_during_training": True}}, "train.schedule"),
    ({"scorer": {"window_k": 4}}, "scorer.window_k"),
    ({"scorer": {"alpha": 1.5}}, "scorer.alpha"),
    ({"model": {"embed_dim": 30}}, "model.embed_dim"),
    ({"model": {"input_height": 8, "input_width": 8}}, "data.height"),
    ({"neuron": {"tau": 0.0}}, "neuron"),
])
def test_invalid_values_name_their_key(data, key):
    assert _key_of(data) == key


def test_non_object_document():
    assert _key_of([]) == "config"


def test_seed_from_environment():
    assert config_from_dict({}, env={SEED_ENV: "42"}).train.seed == 42
    assert config_from_dict({"train": {"seed": 3}}, env={SEED_ENV: ""}).train.seed == 3
    assert _key_of({}, env={SEED_ENV: "abc"}) == "train.seed"


def test_fingerprint_is_stable():
    a = fingerprint(config_from_dict({}, env={}))
    b = fingerprint(config_from_dict({}, env={}))
    assert a == b and len(a) == 64
    assert fingerprint(config_from_dict({"train": {"seed": 1}}, env={})) != a
    assert fingerprint(config_from_dict({}, env={SEED_ENV: "1"})) != a


def test_load_config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"train": {"epochs": 2}}), encoding="utf-8")
    assert load_config(str(path), env={}).train.epochs == 2
    assert load_config(None, env={}).train.epochs == 30
    path.write_text("{\"train\": ", encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_config(str(path), env={})
    assert info.value.key == "config"


def test_parse_schedule_text():
    assert parse_schedule(None) is None
    assert parse_schedule(" None ") is None
    assert parse_schedule("1,0.9", 2).ratios == [1.0, 0.9]
    assert parse_schedule("1, 0.9,").ratios == [1.0, 0.9]
    with pytest.raises(ConfigError):
        parse_schedule("1,0.9", 3)
    with pytest.raises(ConfigError):
        parse_schedule("a,b")
    with pytest.raises(ConfigError) as info:
        parse_schedule("1.5")
    assert info.value.key == "schedule[0]"
    with pytest.raises(ConfigError):
        parse_schedule("nan")


def test_parse_schedule_files(tmp_path):
    listed = tmp_path / "list.json"
    listed.write_text("[1.0, 0.5]", encoding="utf-8")
    wrapped = tmp_path / "wrapped.json"
    wrapped.write_text('{"ratios": [0.9, 0.8]}', encoding="utf-8")
    report = tmp_path / "report.json"
    report.write_text('{"best": [0.72, 0.64], "best_accuracy": 1.0}', encoding="utf-8")
    table = tmp_path / "report.csv"
    table.write_text("# fingerprint=x\nschedule,mean_ratio\n0.81-0.49,0.65\n1-0.5,0.75\n", encoding="utf-8")
    assert parse_schedule(str(listed), 2).ratios == [1.0, 0.5]
    assert parse_schedule(str(wrapped)).ratios == [0.9, 0.8]
    assert parse_schedule(str(report)).ratios == [0.72, 0.64]
    assert parse_schedule(str(table)).ratios == [0.81, 0.49]

    broken = tmp_path / "broken.json"
    broken.write_text("[1.0,", encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_schedule(str(broken))
    headerless = tmp_path / "empty.csv"
    headerless.write_text("ratio\n0.5\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_schedule(str(headerless))


def test_rate_conversions():
    assert pruning_rate_to_retention(0.25) == 0.75
    assert retention_to_pruning_rate(0.5) == 0.5
    assert schedule_from_pruning_rates([0.0, 0.5]).ratios == [1.0, 0.5]
    for bad in (1.0, -0.1):
        with pytest.raises(ConfigError):
            pruning_rate_to_retention(bad)
    with pytest.raises(ConfigError):
        retention_to_pruning_rate(0.0)
