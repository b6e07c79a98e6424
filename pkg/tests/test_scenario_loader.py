import json

import pytest

from core.exceptions import InputValidationError
from core.valuation import TruncatedExponentialModel, UniformLevelModel
from utils.scenario_loader import load_reports, load_scenario, parse_scenario

from conftest import fixture_path, scenario_path


def base_document(**overrides):
    document = {
        "k": 2,
        "m": [1, 0],
        "p": [5.0, 3.0],
        "consumers": [
            {"model": {"family": "uniform", "upper": [20.0, 10.0], "prior": [0.5, 0.5]},
             "true_type": {"theta": 15.0, "b": 1}},
        ],
    }
    document.update(overrides)
    return document


def test_load_worked_example():
    scenario = load_scenario(scenario_path("two_level_purchase.json"))
    assert scenario.market.m == (1, 0)
    assert scenario.market.p == (5.0, 3.0)
    assert scenario.size == 3
    assert scenario.rng_seed == 7
    assert isinstance(scenario.models[0], UniformLevelModel)
    assert scenario.truthful_profile().c == (1, 2, 2)


def test_load_exponential_family():
    scenario = load_scenario(scenario_path("exponential_k2.json"))
    assert isinstance(scenario.models[0], TruncatedExponentialModel)
    assert isinstance(scenario.models[1], TruncatedExponentialModel)
    assert isinstance(scenario.models[2], UniformLevelModel)


def test_seed_defaults_to_zero():
    assert parse_scenario(base_document()).rng_seed == 0


def test_empty_consumer_list():
    scenario = load_scenario(fixture_path("empty.json"))
    assert scenario.size == 0


@pytest.mark.parametrize("overrides", [
    {"p": [3.0, 5.0]},
    {"p": [5.0, 5.0]},
    {"m": [1, -1]},
    {"m": [1]},
    {"k": 0},
    {"extra": True},
    {"consumers": [{"model": {"family": "uniform", "upper": [20.0, 10.0], "prior": [0.7, 0.7]}}]},
    {"consumers": [{"model": {"family": "uniform", "upper": [20.0], "prior": [1.0]}}]},
    {"consumers": [{"model": {"family": "lognormal", "upper": [20.0, 10.0], "prior": [0.5, 0.5]}}]},
])
def test_invalid_documents(overrides):
    with pytest.raises(InputValidationError):
        parse_scenario(base_document(**overrides))


def test_unreadable_files(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(InputValidationError):
        load_scenario(broken)
    with pytest.raises(InputValidationError):
        load_scenario(tmp_path / "missing.json")


def test_load_reports(tmp_path):
    profile = load_reports(fixture_path("under_reported_levels.json"))
    assert profile.r == (15.0, 8.0, 6.75)
    assert profile.c == (1, 1, 2)

    mismatched = tmp_path / "reports.json"
    mismatched.write_text(json.dumps({"r": [1.0], "c": [1, 2]}), encoding="utf-8")
    with pytest.raises(InputValidationError):
        load_reports(mismatched)
