#!/usr/bin/env python3
"""
Deflation Driver Test Script

Covers the k-to-1 driver, its trace, the ePCA and cPCA end-to-end checks,
the composition constant chain, gap buckets and the dyadic merge audit.

Usage:
    pytest test_deflation.py
    python test_deflation.py
"""

import json
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from deflation import (
    black_box_pca,
    cpca_theorem_check,
    dyadic_merge_audit,
    epca_theorem_check,
    final_composition_params,
    gap_buckets,
    projector_telescoping_error,
    verify_cpca_theorem,
    verify_epca_composition,
    verify_epca_theorem,
)
from linalg_core import SymMatrix, identity_projector, random_psd
from oracles import AdversarialEpcaOracle, ExactOracle, OracleBudget, PowerOracle, ScriptedOracle
from pca_errors import InvalidInput, NullResidualSpace, PrecondUnmet, RegimeRejected
from pca_metrics import cpca_mass, epca_error
from spectra import spectrum_gen


def test_exact_deflation_recovers_top_eigenvectors():
    M = SymMatrix.diag([5.0, 4.0, 3.0, 2.0, 1.0])
    trace = black_box_pca(M, 3, ExactOracle())
    U = trace.frame.columns
    assert_allclose(U @ U.T, np.diag([1.0, 1.0, 1.0, 0.0, 0.0]), atol=1e-12)
    assert [s.projector_rank for s in trace.steps] == [4, 3, 2]
    assert [s.residual_top for s in trace.steps] == pytest.approx([5.0, 4.0, 3.0])
    assert epca_error(M, trace.frame).epsilon_achieved == pytest.approx(0.0, abs=1e-12)


def test_trace_serializes():
    trace = black_box_pca(random_psd(4, np.random.default_rng(1)), 2, ExactOracle())
    data = json.loads(trace.to_json())
    assert data["k"] == 2
    assert data["oracle"] == "exact"
    assert len(data["steps"]) == 2
    assert data["null_residual_steps"] == []


def test_driver_validates_k():
    with pytest.raises(InvalidInput):
        black_box_pca(np.eye(3), 4, ExactOracle())
    with pytest.raises(InvalidInput):
        black_box_pca(np.eye(3), 1, ExactOracle(), initial_projector=identity_projector(4))


def test_null_residual_space():
    M = SymMatrix.diag([1.0, 0.0, 0.0])
    with pytest.raises(NullResidualSpace):
        black_box_pca(M, 2, ExactOracle(strict=True))
    trace = black_box_pca(M, 2, ExactOracle())
    assert trace.null_residual_steps == [2]
    assert trace.frame.cols == 2


def test_epca_is_lossless_under_adversarial_oracle():
    rng = np.random.default_rng(3)
    for d, k, eps in [(8, 2, 0.1), (16, 4, 0.01), (16, 8, 0.1)]:
        M = random_psd(d, rng)
        holds, trace, report = epca_theorem_check(M, k, AdversarialEpcaOracle(eps), eps)
        assert holds
        assert report.epsilon_achieved <= eps + 1e-8
        assert trace.max_per_call("epsilon") <= eps + 1e-9


def test_epca_check_rejects_bad_oracle():
    M = SymMatrix.diag([2.0, 1.0, 0.5])
    with pytest.raises(PrecondUnmet):
        verify_epca_theorem(M, 1, ScriptedOracle([[0.0, 0.0, 1.0]]), 0.01)


def test_epca_composition():
    M = random_psd(8, np.random.default_rng(9))
    assert verify_epca_composition(M, 2, 3, ExactOracle(), ExactOracle(), 0.01)


def test_epca_composition_checks_each_block():
    M = SymMatrix.diag([5.0, 4.0, 3.0, 2.0, 1.0])
    with pytest.raises(PrecondUnmet, match="first block"):
        verify_epca_composition(M, 2, 1, AdversarialEpcaOracle(0.3), ExactOracle(), 0.01)
    with pytest.raises(PrecondUnmet, match="second block"):
        verify_epca_composition(M, 2, 2, ExactOracle(), AdversarialEpcaOracle(0.3), 0.01)
    assert verify_epca_composition(M, 2, 2, ExactOracle(), AdversarialEpcaOracle(0.3), 0.3)


def test_final_composition_params():
    params = final_composition_params(1, 0.1, 0.5)
    assert params["delta"] == pytest.approx(0.1 / 640.0 / 18.0)
    assert params["gamma"] == pytest.approx(0.025)

    params = final_composition_params(4, 0.1, 0.5)
    assert params["delta"] == pytest.approx(0.1 / (640.0 * 16) / (18.0 * 16) / (132.0 * 16) ** 2)
    assert params["gamma"] == pytest.approx(0.5 / 40.0 / 8.0 / 4.0)


def test_cpca_reduction_in_valid_regime():
    M = spectrum_gen("geometric", {"d": 8, "ratio": 0.8}, seed=2)
    Gamma = 0.2
    Delta = Gamma**2 / (64.0 * 1.25**2)
    assert verify_cpca_theorem(M, 2, Delta, Gamma)

    holds, trace, measured, params = cpca_theorem_check(M, 3, Delta, Gamma, rng_seed=5)
    assert holds
    assert measured == pytest.approx(cpca_mass(M, trace.frame, Gamma).delta_achieved)
    assert trace.max_per_call("delta") <= params["delta"] + 1e-12


def test_cpca_reduction_rejects_invalid_regime():
    M = SymMatrix.diag([4.0, 2.0, 1.0])
    with pytest.raises(RegimeRejected):
        verify_cpca_theorem(M, 2, 0.5, 0.2)
    with pytest.raises(RegimeRejected):
        verify_cpca_theorem(SymMatrix.diag([1.0, 0.0, 0.0]), 2, 0.001, 0.2)


def test_gap_buckets():
    M = SymMatrix.diag([1.0, 0.95, 0.5, 0.45, 0.1])
    assert gap_buckets(M, 4, 0.2) == [0, 2, 4]
    assert gap_buckets(M, 1, 0.2) == [0, 1]


def test_dyadic_audit_and_telescoping():
    M = spectrum_gen("gapped", {"d": 8, "gap_at": 2, "Gamma": 0.3}, seed=4)
    trace = black_box_pca(M, 4, ExactOracle())
    audit = dyadic_merge_audit(trace, M, delta=0.0, gamma=0.0, Gamma_bar=0.2)
    assert audit["boundaries"] == [0, 2, 4]
    assert audit["all_hold"]
    assert audit["merges"] == len(audit["nodes"]) == 3
    assert all(bucket["well_conditioned"] for bucket in audit["buckets"])
    assert projector_telescoping_error(trace) <= 1e-8

    with pytest.raises(InvalidInput):
        dyadic_merge_audit(trace, M, schedule=[0, 3, 2, 4])


def test_dyadic_audit_reads_gamma_from_trace():
    M = SymMatrix.diag([1.0 - 0.02 * i for i in range(8)])
    trace = black_box_pca(M, 4, PowerOracle(OracleBudget(delta=1e-3, gamma=0.1)))
    assert [s.certificate["gamma"] for s in trace.steps] == [0.1] * 4
    assert json.loads(trace.to_json())["steps"][0]["certificate"]["gamma"] == 0.1

    audit = dyadic_merge_audit(trace, M)
    assert sorted(node["gamma"] for node in audit["nodes"]) == pytest.approx([0.2, 0.2, 0.4])
    assert audit["all_hold"]
    first_pair = next(node for node in audit["nodes"] if (node["start"], node["end"]) == (0, 2))
    assert first_pair["measured"] == pytest.approx(0.0, abs=1e-12)
    assert audit == dyadic_merge_audit(trace, M, gamma=0.1)


def main():
    """Run deflation tests"""
    print("🧪 Deflation Driver Test Suite")
    print("=" * 50)

    tests = [
        ("Exact Deflation", test_exact_deflation_recovers_top_eigenvectors),
        ("Trace JSON", test_trace_serializes),
        ("Driver Validation", test_driver_validates_k),
        ("Null Residual", test_null_residual_space),
        ("Lossless ePCA", test_epca_is_lossless_under_adversarial_oracle),
        ("ePCA Precondition", test_epca_check_rejects_bad_oracle),
        ("ePCA Composition", test_epca_composition),
        ("ePCA Composition Blocks", test_epca_composition_checks_each_block),
        ("Composition Constants", test_final_composition_params),
        ("cPCA Valid Regime", test_cpca_reduction_in_valid_regime),
        ("cPCA Regime Rejected", test_cpca_reduction_rejects_invalid_regime),
        ("Gap Buckets", test_gap_buckets),
        ("Dyadic Audit", test_dyadic_audit_and_telescoping),
        ("Dyadic Audit Gamma Default", test_dyadic_audit_reads_gamma_from_trace),
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
