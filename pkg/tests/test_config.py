import json

import pytest

from handopt.config import (
    ConfigError,
    RunConfig,
    apply_overrides,
    config_from_dict,
    load_config,
)
from handopt.design import DESIGN_V3, DESIGN_V5


def test_empty_config_is_complete():
    cfg = config_from_dict({})
    assert cfg == RunConfig()
    assert cfg.master_seed == 0
    assert cfg.instances == ("sphere@1.0", "board@1.0")
    assert cfg.evolution.seed_designs() == (DESIGN_V3, DESIGN_V5)


def test_load_config_none_gives_defaults():
    assert load_config(None) == RunConfig()


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"master_sed": 1})
    with pytest.raises(ConfigError):
        config_from_dict({"training": {"budgett": 10}})
    with pytest.raises(ConfigError):
        config_from_dict({"training": 3})


def test_sections_parse(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(
        json.dumps(
            {
                "master_seed": 7,
                "training": {"budget": 12, "sigma": 0.1},
                "evaluation": {"k_intervals": 4},
                "instances": ["pen@1.25"],
            }
        )
    )
    cfg = load_config(path)
    assert cfg.master_seed == 7
    assert cfg.training.budget == 12
    assert cfg.training.sigma == 0.1
    assert cfg.training.gamma == 0.99  # untouched default
    assert cfg.evaluation.k_intervals == 4
    assert cfg.instance_specs()[0].label == "pen@1.25"


def test_bad_file_and_bad_json(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_apply_overrides():
    cfg = apply_overrides(RunConfig(), ["master_seed=9", "training.budget=3", "workers=2"])
    assert cfg.master_seed == 9
    assert cfg.training.budget == 3
    assert cfg.workers == 2


def test_apply_overrides_parses_json_values():
    cfg = apply_overrides(RunConfig(), ['instances=["ring@0.75"]', "evolution.q=-1.5"])
    assert cfg.instances == ("ring@0.75",)
    assert cfg.evolution.q == -1.5


def test_apply_overrides_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), ["nope=1"])
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), ["training.nope=1"])
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(), ["justakey"])


def test_named_seed_designs():
    cfg = config_from_dict({"evolution": {"seeds": ["v5", "v3"]}})
    assert cfg.evolution.seed_designs() == (DESIGN_V5, DESIGN_V3)
    with pytest.raises(ConfigError):
        config_from_dict({"evolution": {"seeds": ["v99"]}}).evolution.seed_designs()


def test_inline_seed_design():
    cfg = config_from_dict({"evolution": {"seeds": ["v3", DESIGN_V5.to_json_dict()]}})
    assert cfg.evolution.seed_designs() == (DESIGN_V3, DESIGN_V5)


def test_resolve_workers(monkeypatch):
    monkeypatch.delenv("HANDOPT_WORKERS", raising=False)
    assert RunConfig(workers=3).resolve_workers() == 3
    monkeypatch.setenv("HANDOPT_WORKERS", "5")
    assert RunConfig(workers=3).resolve_workers() == 5
    monkeypatch.setenv("HANDOPT_WORKERS", "0")
    assert RunConfig().resolve_workers() == 1
