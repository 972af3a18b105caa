#!/usr/bin/env python3
"""
Adversarial Constructions Test Script

Usage:
    pytest test_adversarial.py
    python test_adversarial.py
"""

import math
import sys

import numpy as np
import pytest

from adversarial import (
    INVALID,
    VALID_CANDIDATE,
    RegimeFunction,
    build_linear_regime_instance,
    build_sqrt_regime_instance,
    find_witness,
    lowerbound_family,
    regime_classify,
    run_witness,
    sqrt_regime_window,
)
from pca_errors import InvalidInput, NotInRegime


def test_linear_regime_instance_breaks_deflation():
    instance = build_linear_regime_instance(1e-3, 4.0)
    assert instance.kind == "linear"
    assert instance.kappa == pytest.approx(4.0)
    assert instance.Gamma == pytest.approx(4e-6)
    assert instance.metadata["u2_numeric_gap"] <= 1e-8
    assert run_witness(instance) == pytest.approx(1.0, abs=1e-12)


def test_linear_regime_window():
    with pytest.raises(NotInRegime):
        build_linear_regime_instance(0.5, 4.0, g=RegimeFunction(1.0, 1.0, 1.0))
    with pytest.raises(InvalidInput):
        build_linear_regime_instance(1e-3, 1.0)


def test_sqrt_regime_instance_breaks_deflation():
    instance = build_sqrt_regime_instance(1e-3)
    K, lower, upper = sqrt_regime_window(1e-3, 1.0, 0.1)
    assert K == pytest.approx(0.01)
    assert instance.Gamma == pytest.approx(upper)
    assert instance.delta == pytest.approx(1e-4)
    assert abs(instance.metadata["lambda"] - instance.metadata["lambda_numeric"]) <= 1e-10
    assert instance.metadata["u2_3_sq"] > instance.Delta
    assert run_witness(instance) > instance.Delta

    with pytest.raises(NotInRegime):
        build_sqrt_regime_instance(1e-3, Gamma=lower / 2.0)


def test_regime_classification():
    assert regime_classify(RegimeFunction(1.0, 1.0, 1.0)).witness is build_sqrt_regime_instance
    assert regime_classify(RegimeFunction(1.0, 1.0, 1.0)).label == INVALID
    assert regime_classify(RegimeFunction(1.0, 0.5, 1.0)).label == VALID_CANDIDATE
    assert regime_classify(RegimeFunction(1.0, 2.0, 1.0)).witness is build_linear_regime_instance
    assert regime_classify(RegimeFunction(1.0, 0.5, 0.5)).witness is build_linear_regime_instance
    with pytest.raises(InvalidInput):
        RegimeFunction(0.0, 1.0, 1.0)


def test_find_witness():
    linear = find_witness(RegimeFunction(1.0, 2.0, 1.0))
    assert linear.kind == "linear"
    assert linear.Delta == pytest.approx(1e-2)
    assert linear.kappa == pytest.approx(3.0)
    assert run_witness(linear) == pytest.approx(1.0, abs=1e-12)

    sqrt = find_witness(RegimeFunction(1.0, 1.0, 1.0))
    assert sqrt.kind == "sqrt"
    assert sqrt.Delta == pytest.approx(1e-5)
    assert run_witness(sqrt) > sqrt.Delta

    with pytest.raises(NotInRegime):
        find_witness(RegimeFunction(1.0, 0.5, 1.0))


def test_lowerbound_family():
    family = lowerbound_family(4, 4, 3.0, 0.01)
    assert len(family) == 5
    null, planted = family[0], family[1]
    assert null.index is None
    assert null.tv_to_null() == 0.0
    assert planted.s == pytest.approx(0.215)
    assert planted.coordinate_moment(2) == pytest.approx(1.215)
    assert planted.moment_ratio() == pytest.approx(6.0525**0.25 / math.sqrt(1.215))
    assert planted.tv_to_null() == pytest.approx(0.01)
    assert planted.epca_error_of(np.eye(4)[0]) == pytest.approx(0.0)
    assert planted.epca_error_of(np.eye(4)[1]) == pytest.approx(0.215 / 1.215)

    X = planted.sample(200000)
    assert X.shape == (200000, 4)
    assert np.mean(X[:, 0] ** 2) == pytest.approx(1.215, abs=0.05)
    assert np.all(np.abs(X[:, 1:]) == 1.0)

    with pytest.raises(InvalidInput):
        lowerbound_family(4, 3, 3.0, 0.01)
    with pytest.raises(InvalidInput):
        lowerbound_family(4, 4, 2.0, 0.01)


def main():
    """Run adversarial construction tests"""
    print("🧪 Adversarial Constructions Test Suite")
    print("=" * 50)

    tests = [
        ("Linear Regime Instance", test_linear_regime_instance_breaks_deflation),
        ("Linear Regime Window", test_linear_regime_window),
        ("Square-root Regime Instance", test_sqrt_regime_instance_breaks_deflation),
        ("Regime Classification", test_regime_classification),
        ("Witness Search", test_find_witness),
        ("Lower-bound Family", test_lowerbound_family),
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
