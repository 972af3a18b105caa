#!/usr/bin/env python3
"""
1-PCA Oracle Test Script

Exercises every oracle backend through the OneOracle interface and the
factory, including the streaming Oja oracle on a small Gaussian stream.

Usage:
    pytest test_oracles.py
    python test_oracles.py
"""

import math
import sys

import numpy as np
import pytest

from linalg_core import Frame, SymMatrix, identity_projector, random_psd
from online import SampleStream
from oracles import (
    AdversarialEpcaOracle,
    ExactOracle,
    OjaOracle,
    OracleBudget,
    OracleFactory,
    OracleQuery,
    PowerOracle,
    ScriptedOracle,
    oja_sample_size,
)
from pca_config import OJA_N_CONSTANT
from pca_errors import BudgetExhausted, InvalidInput, NullResidualSpace, OracleContractViolation
from pca_metrics import per_call_errors
from robust import FilterOracle

E = np.eye(3)


def test_exact_oracle_respects_projector():
    M = SymMatrix.diag([1.0, 3.0, 2.0])
    first = ExactOracle().answer(OracleQuery(identity_projector(3), matrix=M))
    assert abs(first.vector[1]) == pytest.approx(1.0)

    P = Frame(E[:, 1]).complement_projector()
    second = ExactOracle()(OracleQuery(P, matrix=M, step=2))
    assert abs(second.vector[2]) == pytest.approx(1.0)


def test_exact_oracle_null_residual():
    M = SymMatrix.diag([1.0, 0.0, 0.0])
    P = Frame(E[:, 0]).complement_projector()
    with pytest.raises(NullResidualSpace):
        ExactOracle(strict=True).answer(OracleQuery(P, matrix=M, step=2))
    answer = ExactOracle().answer(OracleQuery(P, matrix=M, step=2))
    assert answer.diagnostics["null_residual"]
    assert P.span_distance(answer.vector) <= 1e-10


def test_budget_validation():
    with pytest.raises(InvalidInput):
        OracleBudget(delta=0.01)
    with pytest.raises(InvalidInput):
        OracleBudget(epsilon=1.5)
    assert OracleBudget(delta=1e-5, gamma=0.1).satisfies_oja_precondition()
    assert not OracleBudget(delta=1e-3, gamma=0.1).satisfies_oja_precondition()
    assert not OracleBudget(epsilon=0.1).satisfies_oja_precondition()


def test_power_oracle_meets_budget():
    M = random_psd(8, np.random.default_rng(4))
    budget = OracleBudget(delta=1e-6, gamma=0.1, rng_seed=4)
    answer = PowerOracle(budget).answer(OracleQuery(identity_projector(8), matrix=M))
    assert answer.diagnostics["achieved_delta"] <= 1e-6
    assert per_call_errors(M, answer.vector, gamma=0.1)["delta"] <= 1e-6 + 1e-12

    with pytest.raises(InvalidInput):
        PowerOracle(OracleBudget(epsilon=0.1))


def test_power_oracle_budget_exhausted():
    M = random_psd(5, np.random.default_rng(6))
    budget = OracleBudget(delta=0.0, gamma=0.1, max_iters=0)
    with pytest.raises(BudgetExhausted) as excinfo:
        PowerOracle(budget).answer(OracleQuery(identity_projector(5), matrix=M))
    assert excinfo.value.achieved > 0.0


def test_adversarial_oracle_saturates():
    M = SymMatrix.diag([2.0, 1.0, 0.5])
    answer = AdversarialEpcaOracle(0.1).answer(OracleQuery(identity_projector(3), matrix=M))
    assert np.linalg.norm(answer.vector) == pytest.approx(1.0)
    assert per_call_errors(M, answer.vector)["epsilon"] == pytest.approx(0.1, abs=1e-12)
    assert answer.diagnostics["leak"] == pytest.approx(0.1 / 0.75)


def test_scripted_oracle_contract():
    oracle = ScriptedOracle([E[:, 0], E[:, 0]])
    P = identity_projector(3)
    assert np.array_equal(oracle.answer(OracleQuery(P)).vector, E[:, 0])
    with pytest.raises(OracleContractViolation, match="outside span"):
        oracle.answer(OracleQuery(Frame(E[:, 0]).complement_projector(), step=2))
    with pytest.raises(OracleContractViolation, match="no scripted answer"):
        oracle.answer(OracleQuery(P, step=3))
    oracle.reset()
    assert oracle.calls == 0


def test_factory():
    assert isinstance(OracleFactory.create_oracle(" Exact "), ExactOracle)
    assert OracleFactory.create_oracle("power", budget=OracleBudget(delta=0.1, gamma=0.1)).get_oracle_name() == "power"
    filter_oracle = OracleFactory.create_oracle("filter", points=np.ones((4, 2)), eps=0.1, gamma=0.2)
    assert isinstance(filter_oracle, FilterOracle)
    with pytest.raises(ValueError, match="Unknown oracle type"):
        OracleFactory.create_oracle("lanczos")


def test_oja_sample_size_formula():
    expected = math.ceil(OJA_N_CONSTANT * 10 / (0.01 * 0.1**2) * math.log(10 / 0.1))
    assert oja_sample_size(10, 0.01, 0.1, beta=0.1) == expected
    with pytest.raises(InvalidInput):
        oja_sample_size(10, 0.0, 0.1)


def test_oja_oracle_finds_top_direction():
    sigma = np.diag([4.0, 1.0, 1.0, 1.0])
    stream = SampleStream.from_sampler("gaussian", sigma, n=20000, seed=1)
    oracle = OjaOracle(OracleBudget(delta=0.05, gamma=0.5, rng_seed=1), warn_short=False)
    answer = oracle.answer(OracleQuery(identity_projector(4), stream=stream))
    assert answer.diagnostics["samples"] == 20000
    assert answer.vector[0] ** 2 >= 0.9
    assert stream.remaining == 0

    with pytest.raises(ValueError, match="Unknown schedule type"):
        OjaOracle(OracleBudget(delta=0.05, gamma=0.5), schedule="cosine")


def main():
    """Run oracle tests"""
    print("🧪 1-PCA Oracle Test Suite")
    print("=" * 50)

    tests = [
        ("Exact Oracle", test_exact_oracle_respects_projector),
        ("Null Residual", test_exact_oracle_null_residual),
        ("Budget Validation", test_budget_validation),
        ("Power Oracle", test_power_oracle_meets_budget),
        ("Power Budget Exhausted", test_power_oracle_budget_exhausted),
        ("Adversarial Oracle", test_adversarial_oracle_saturates),
        ("Scripted Oracle", test_scripted_oracle_contract),
        ("Oracle Factory", test_factory),
        ("Oja Sample Size", test_oja_sample_size_formula),
        ("Oja Oracle", test_oja_oracle_finds_top_direction),
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
