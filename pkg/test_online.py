#!/usr/bin/env python3
"""
Online k-cPCA Test Script

Usage:
    pytest test_online.py
    python test_online.py
"""

import math
import os
import sys
import tempfile
import warnings

import numpy as np
import pytest

from linalg_core import SymMatrix
from online import (
    SampleStream,
    StreamConfig,
    corollary_rho,
    estimate_trace,
    kappa_transfer_check,
    oja_k_rho,
    online_kcpca,
    online_kcpca_trace,
    online_sample_size,
    perturbation_transfer,
)
from pca_config import MAX_SAMPLES
from pca_errors import BudgetWarning, InvalidInput, PerturbationTooLarge, RegimeRejected
from pca_metrics import cpca_mass
from robust import corrupt, sampler_subgaussian, save_dataset


def test_stream_take_and_boundaries():
    stream = SampleStream.from_sampler("gaussian", np.eye(2), n=10, seed=1)
    batches = list(stream.take(4, batch_size=3))
    assert [b.shape[0] for b in batches] == [3, 1]
    assert stream.consumed == 4
    assert stream.boundaries == [0, 4]

    with pytest.warns(BudgetWarning, match="only 6 of 10"):
        rest = list(stream.take(10, batch_size=4))
    assert sum(b.shape[0] for b in rest) == 6
    assert stream.remaining == 0
    assert stream.boundaries == [0, 4, 10]

    with pytest.raises(ValueError, match="Unknown stream type"):
        SampleStream.from_sampler("cauchy", np.eye(2), n=10)


def test_stream_is_deterministic_across_batch_sizes():
    sigma = np.diag([3.0, 1.0, 0.5])
    one = SampleStream.from_sampler("hypercontractive", sigma, n=5000, seed=7)
    many = SampleStream.from_sampler("hypercontractive", sigma, n=5000, seed=7)
    A = np.vstack(list(one.take(5000, batch_size=1)))
    B = np.vstack(list(many.take(5000, batch_size=64)))
    assert A.shape == (5000, 3)
    assert np.array_equal(A, B)


def test_stream_config_defaults():
    cfg = StreamConfig(n=1000, d=4, k=2, Delta=0.02, Gamma=0.5)
    assert cfg.delta == pytest.approx(0.0025)
    assert cfg.gamma == pytest.approx(0.125)
    assert cfg.alpha == pytest.approx(math.sqrt(160.0))
    assert cfg.radius(2.0) == pytest.approx(8.0 * math.sqrt(160.0))
    cfg.validate()

    with pytest.raises(InvalidInput):
        StreamConfig(n=1000, d=4, k=5, Delta=0.02, Gamma=0.5)
    with pytest.raises(RegimeRejected):
        StreamConfig(n=1000, d=4, k=2, Delta=0.5, Gamma=0.5).validate()


def test_online_kcpca_end_to_end():
    sigma = SymMatrix.diag([4.0, 2.0] + [0.5] * 6)
    cfg = StreamConfig(n=30000, d=8, k=2, Delta=0.05, Gamma=0.5, seed=3)
    stream = SampleStream.from_sampler("hypercontractive", sigma, n=cfg.n, seed=3)
    with pytest.warns(BudgetWarning):
        trace, trace_hat, R = online_kcpca_trace(stream, cfg)
    assert trace.frame.cols == 2
    assert stream.boundaries == [0, 80, 15040, 30000]
    assert trace_hat == pytest.approx(9.0, rel=0.5)
    assert R > trace_hat
    assert cpca_mass(sigma, trace.frame, cfg.Gamma).delta_achieved <= cfg.Delta


def test_online_kcpca_rejects_mismatch():
    stream = SampleStream.from_sampler("gaussian", np.eye(3), n=100)
    with pytest.raises(InvalidInput):
        online_kcpca(stream, StreamConfig(n=100, d=4, k=1, Delta=0.01, Gamma=0.5))


def test_perturbation_transfer():
    assert perturbation_transfer(0.01, 0.05, 0.00125, 1.0, 2) == pytest.approx((0.03, 0.1))
    with pytest.raises(PerturbationTooLarge):
        perturbation_transfer(0.01, 0.05, 0.03, 1.0, 2)
    with pytest.raises(InvalidInput):
        perturbation_transfer(0.2, 0.05, 0.001, 1.0, 2)


def test_kappa_transfer():
    Sigma = np.diag([4.0, 2.0, 1.0])
    Sigma_hat = Sigma + 0.05 * np.diag([1.0, -1.0, 0.0])
    assert kappa_transfer_check(Sigma, Sigma_hat, 0.5, k=2)
    with pytest.raises(PerturbationTooLarge):
        kappa_transfer_check(Sigma, Sigma_hat, 0.01, k=2)


def test_rho_formulas():
    assert corollary_rho(0.08, 0.5, 2.0, 1) == pytest.approx(0.1)
    assert oja_k_rho(0.24, 0.5, 2.0, 1) == pytest.approx(0.025)


def test_estimate_trace():
    stream = SampleStream.from_sampler("gaussian", np.diag([1.0, 1.0, 2.0]), n=20000, seed=2)
    assert estimate_trace(stream, 20000) == pytest.approx(4.0, abs=0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BudgetWarning)
        with pytest.raises(InvalidInput):
            estimate_trace(stream, 10)


def test_online_sample_size_cap():
    cfg = StreamConfig(n=1000, d=16, k=4, Delta=1e-4, Gamma=0.1)
    with pytest.warns(BudgetWarning, match="cap"):
        assert online_sample_size(cfg) == MAX_SAMPLES


def test_dataset_stream():
    X = sampler_subgaussian(np.eye(3), 5000, seed=4)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "stream.csv")
        save_dataset(corrupt(X, 0.0), path)
        stream = SampleStream.from_dataset(path)
        assert stream.dim == 3
        assert stream.n_total == 5000
        replay = np.vstack(list(stream.take(5000, batch_size=1000)))
    assert np.array_equal(replay, X)


def main():
    """Run online k-cPCA tests"""
    print("🧪 Online k-cPCA Test Suite")
    print("=" * 50)

    tests = [
        ("Stream Take", test_stream_take_and_boundaries),
        ("Stream Determinism", test_stream_is_deterministic_across_batch_sizes),
        ("Stream Config", test_stream_config_defaults),
        ("Online k-cPCA", test_online_kcpca_end_to_end),
        ("Dimension Mismatch", test_online_kcpca_rejects_mismatch),
        ("Perturbation Transfer", test_perturbation_transfer),
        ("Kappa Transfer", test_kappa_transfer),
        ("Rho Formulas", test_rho_formulas),
        ("Trace Estimate", test_estimate_trace),
        ("Sample Size Cap", test_online_sample_size_cap),
        ("Dataset Stream", test_dataset_stream),
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
