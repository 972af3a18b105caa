#!/usr/bin/env python3
"""
Experiment Registry Test Script

Seeds, row judging, parameter resolution, TOML configs and single-seed runs
of the cheaper experiments.

Usage:
    pytest test_experiments.py
    python test_experiments.py
"""

import json
import math
import os
import sys
import tempfile

import pytest

from experiments import (
    EXPECTED_FAIL,
    EXPERIMENTS,
    FAIL,
    PASS,
    ExperimentConfig,
    ExperimentFactory,
    ResultRow,
    judge,
    parse_seeds,
    resolve_params,
    run_seed,
)
from pca_errors import InvalidInput


def _params(name, **overrides):
    return resolve_params(ExperimentFactory.create_experiment(name), overrides)


def test_parse_seeds():
    assert parse_seeds("1..3") == [1, 2, 3]
    assert parse_seeds("1, 2,5") == [1, 2, 5]
    assert parse_seeds(7) == [7]
    assert parse_seeds([4, 3]) == [4, 3]
    for bad in ("3..1", "one", "", True, [-1], []):
        with pytest.raises(InvalidInput):
            parse_seeds(bad)


def test_judge():
    assert judge(0.1, 0.1, 0.0) == PASS
    assert judge(0.2, 0.1, 0.0) == FAIL
    assert judge(math.nan, 0.1, 1.0) == FAIL
    assert judge(0.1 + 1e-10, 0.1, 1e-9, check="equal") == PASS
    assert judge(0.0, 0.1, 1e-9, check="equal") == FAIL
    assert judge(1.0, 1e-3, 1e-8, expect_fail=True) == EXPECTED_FAIL
    assert judge(0.0, 1e-3, 1e-8, expect_fail=True) == FAIL
    assert judge(math.nan, 1e-3, 1e-8, expect_fail=True) == FAIL


def test_result_row_csv():
    row = ResultRow("facts", 3, 8, 0, {"b": 1, "a": 2}, 0.25, 0.5, PASS, ms=12.3456)
    assert row.passed
    csv_row = row.to_csv_row()
    assert csv_row["param_json"] == '{"a": 2, "b": 1}'
    assert csv_row["measured"] == "0.25"
    assert csv_row["pass"] == "PASS"
    assert csv_row["ms"] == "12.346"
    assert row.to_csv_row(timing=False)["ms"] == "0"
    assert ResultRow("facts", 3, 8, 0, {}, 1.0, 0.0, EXPECTED_FAIL).passed


def test_registry_and_factory():
    assert len(EXPERIMENTS) == 12
    assert ExperimentFactory.create_experiment(" EPCA-Lossless ").name == "epca-lossless"
    with pytest.raises(ValueError, match="Unknown experiment type"):
        ExperimentFactory.create_experiment("pca-everything")
    for experiment in EXPERIMENTS.values():
        assert experiment.description


def test_resolve_params():
    params = _params("epca-lossless", d=8, k=[2])
    assert params["d"] == [8]
    assert params["k"] == [2]
    assert params["eps"] == [0.01, 0.1]

    assert _params("cpca-valid-regime", d=[16])["d"] == 16
    with pytest.raises(InvalidInput):
        _params("cpca-valid-regime", d=[8, 16])
    with pytest.raises(InvalidInput):
        _params("epca-tightness", gamma=[0.1])


def test_config_validation():
    config = ExperimentConfig.from_dict({"schema": 1, "experiment": "facts", "seeds": "1..2", "params": {"d": 5}})
    assert config.seeds == [1, 2]
    assert config.params["d"] == 5
    assert config.to_dict()["experiment"] == "facts"

    updated = config.with_overrides({"trials": [3]}, seeds=[9], timing=False)
    assert updated.params["trials"] == 3
    assert updated.seeds == [9]
    assert not updated.timing

    with pytest.raises(InvalidInput, match="schema"):
        ExperimentConfig.from_dict({"schema": 2, "experiment": "facts"})
    with pytest.raises(InvalidInput, match="missing 'schema'"):
        ExperimentConfig.from_dict({"experiment": "facts"})
    with pytest.raises(InvalidInput, match="unknown config keys"):
        ExperimentConfig.from_dict({"schema": 1, "experiment": "facts", "colour": "blue"})
    with pytest.raises(InvalidInput):
        ExperimentConfig("facts", jobs=0)


def test_config_from_toml():
    with tempfile.TemporaryDirectory() as tmp:
        good = os.path.join(tmp, "good.toml")
        with open(good, "w", encoding="utf-8") as f:
            f.write('schema = 1\nexperiment = "robust-subg"\nseeds = [2]\n\n')
            f.write('[params]\nk = 2\n\n[dataset]\nstrategy = "mirror"\n')
        config = ExperimentConfig.from_toml(good)
        assert config.params["k"] == 2
        assert config.params["strategy"] == "mirror"

        bad = os.path.join(tmp, "bad.toml")
        with open(bad, "w", encoding="utf-8") as f:
            f.write("schema = = 1\n")
        with pytest.raises(InvalidInput, match="malformed config"):
            ExperimentConfig.from_toml(bad)


def test_shipped_configs_load():
    folder = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data", "examples")
    names = sorted(name for name in os.listdir(folder) if name.endswith(".toml"))
    assert names
    for name in names:
        config = ExperimentConfig.from_toml(os.path.join(folder, name))
        assert config.experiment in EXPERIMENTS


def test_run_epca_tightness():
    rows = run_seed("epca-tightness", _params("epca-tightness", k=[1, 2], eps=[0.1]), seed=1, timing=False)
    assert [(row.d, row.k) for row in rows] == [(2, 1), (4, 2)]
    assert all(row.status == PASS for row in rows)
    assert all(row.ms == 0.0 for row in rows)
    assert all(abs(row.measured - 0.1) <= 1e-9 for row in rows)


def test_run_invalid_regime():
    rows = run_seed("invalid-regime", _params("invalid-regime", Delta=[1e-3]), seed=1)
    instances = [row.params["instance"] for row in rows]
    assert instances == ["sqrt", "sqrt-lambda", "linear", "linear-exact"]
    assert [row.status for row in rows] == [EXPECTED_FAIL, PASS, EXPECTED_FAIL, PASS]

    aliased = run_seed("invalid-regime", _params("invalid-regime", delta=[1e-3]), seed=1, timing=False)
    assert [row.status for row in aliased] == [EXPECTED_FAIL, PASS, EXPECTED_FAIL, PASS]


def test_run_facts():
    rows = run_seed("facts", _params("facts", d=4, trials=5, wedin_trials=4), seed=2)
    facts = [row.params["fact"] for row in rows]
    assert facts == ["interlacing", "best_proj", "weyl", "trace_cs", "loewner_trace", "wedin", "telescoping"]
    assert all(row.status == PASS for row in rows)
    json.dumps([row.params for row in rows])


def test_run_epca_lossless():
    rows = run_seed("epca-lossless", _params("epca-lossless", d=[8], k=[2, 16], eps=[0.1]), seed=3)
    assert len(rows) == 1
    assert rows[0].status == PASS
    assert rows[0].measured <= 0.1 + 1e-8


def test_run_robust_ht_clips_before_corruption():
    rows = run_seed("robust-ht", _params("robust-ht", d=8, k=2, eps=[0.05], n=4000), seed=1, timing=False)
    assert len(rows) == 1
    row = rows[0]
    gamma = 4.0 * math.sqrt(0.05)
    assert row.params["gamma"] == pytest.approx(gamma)
    assert row.params["R"] == pytest.approx(2.0**4 / (gamma / 2.0) * 12.5)
    assert 0.0 <= row.params["clipped"] <= 0.05
    assert row.status == PASS


def test_run_stability_deflation_pairs():
    params = _params("stability-deflation")
    assert params["trials"] == 100
    rows = run_seed("stability-deflation", params, seed=1, timing=False)
    assert len(rows) == 100
    assert all(row.status == PASS for row in rows)
    assert not any(row.params["original_stable"] and not row.params["deflated_stable"] for row in rows)
    assert all(row.measured <= row.bound + 1e-9 for row in rows)


def main():
    """Run experiment registry tests"""
    print("🧪 Experiment Registry Test Suite")
    print("=" * 50)

    tests = [
        ("Seed Parsing", test_parse_seeds),
        ("Row Judging", test_judge),
        ("CSV Rows", test_result_row_csv),
        ("Registry", test_registry_and_factory),
        ("Parameter Resolution", test_resolve_params),
        ("Config Validation", test_config_validation),
        ("TOML Config", test_config_from_toml),
        ("Shipped Configs", test_shipped_configs_load),
        ("epca-tightness", test_run_epca_tightness),
        ("invalid-regime", test_run_invalid_regime),
        ("facts", test_run_facts),
        ("epca-lossless", test_run_epca_lossless),
        ("robust-ht", test_run_robust_ht_clips_before_corruption),
        ("stability-deflation", test_run_stability_deflation_pairs),
    ]

    passed = 0
    total = len(tests)

    for test_name, test_func in tests:
        print(f"\n{'='*15} {test_name} {'='*15}")

        try:
            test_func()
            passed += 1
            print(f"✅ {test_name} PASSED")
        except AssertionError as e:
            print(f"❌ {test_name} FAILED: {e}")
        except Exception as e:
            print(f"💥 {test_name} CRASHED: {e}")

    print("\n" + "=" * 50)
    print(f"📊 Test Results: {passed}/{total} tests passed")
    return passed == total


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
