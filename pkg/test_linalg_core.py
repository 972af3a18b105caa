#!/usr/bin/env python3
"""
Linear Algebra Core Test Script

Checks the eigensolvers, frames, projectors and the classical-fact slack
functions on fixed and randomly generated symmetric matrices.

Usage:
    pytest test_linalg_core.py
    python test_linalg_core.py
"""

import sys
from unittest import mock

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

import linalg_core
from linalg_core import (
    Frame,
    SymMatrix,
    best_proj_slack,
    cond_k,
    deflate_projector,
    eig_sym,
    eigenspace_split,
    eigenvalues,
    generalized_mean_slack,
    identity_projector,
    interlacing_slack,
    jacobi_eigh,
    ky_fan,
    loewner_trace_slack,
    psd_sqrt,
    random_frame,
    random_orthogonal,
    random_projector,
    random_psd,
    subspace_overlap,
    trace_cs_slack,
    weyl_slack,
)
from pca_config import DEFAULT_EIGEN_SOLVER
from pca_errors import InvalidInput, OracleContractViolation, SingularTopSpace

SEEDS = st.integers(min_value=0, max_value=2**32 - 1)
DIMS = st.integers(min_value=2, max_value=8)


def test_eig_sym_sorts_and_fixes_signs():
    spectrum = eig_sym(SymMatrix.diag([3.0, 1.0, 2.0]))
    assert_allclose(spectrum.eigenvalues, [3.0, 2.0, 1.0])
    assert_allclose(spectrum.eigenvectors.columns, np.eye(3)[:, [0, 2, 1]], atol=1e-12)


def test_jacobi_matches_lapack():
    M = random_psd(6, np.random.default_rng(11))
    lapack = eig_sym(M, solver="lapack")
    jacobi = eig_sym(M, solver="jacobi")
    assert_allclose(jacobi.eigenvalues, lapack.eigenvalues, atol=1e-10)
    top_lapack = lapack.top(3).span_projector().matrix
    top_jacobi = jacobi.top(3).span_projector().matrix
    assert_allclose(top_jacobi, top_lapack, atol=1e-8)


def test_unknown_solver_rejected():
    with pytest.raises(ValueError, match="Unknown eigensolver type"):
        eig_sym(np.eye(2), solver="arpack")


def test_jacobi_is_default_solver():
    assert DEFAULT_EIGEN_SOLVER == "jacobi"
    M = random_psd(5, np.random.default_rng(12))
    with mock.patch.object(linalg_core, "EIGEN_SOLVER", DEFAULT_EIGEN_SOLVER), mock.patch.object(
        linalg_core, "jacobi_eigh", wraps=linalg_core.jacobi_eigh
    ) as jacobi, mock.patch.object(linalg_core.scipy.linalg, "eigh", wraps=linalg_core.scipy.linalg.eigh) as lapack:
        spectrum = eig_sym(M)
        values = eigenvalues(M)
    assert jacobi.call_count == 2
    assert lapack.call_count == 0
    assert_allclose(values, spectrum.eigenvalues, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=SEEDS, d=st.integers(min_value=1, max_value=9))
def test_jacobi_round_robin_odd_and_even(seed, d):
    M = random_psd(d, np.random.default_rng(seed))
    values, vectors = jacobi_eigh(M.entries)
    assert_allclose(vectors.T @ vectors, np.eye(d), atol=1e-10)
    assert_allclose(vectors @ np.diag(values) @ vectors.T, M.entries, atol=1e-9 * max(1.0, np.abs(M.entries).max()))


@settings(max_examples=30, deadline=None)
@given(seed=SEEDS, d=DIMS)
def test_eig_sym_reconstructs(seed, d):
    M = random_psd(d, np.random.default_rng(seed))
    spectrum = eig_sym(M)
    assert spectrum.reconstruction_error(M) <= 1e-10 * max(1.0, M.frob_norm())
    V = spectrum.eigenvectors.columns
    assert np.max(np.abs(V.T @ V - np.eye(d))) <= 1e-12
    assert np.all(np.diff(spectrum.eigenvalues) <= 0.0)


def test_ky_fan_and_cond_k():
    M = SymMatrix.diag([4.0, 2.0, 1.0])
    assert ky_fan(M, 2) == pytest.approx(6.0)
    assert cond_k(M, 2) == pytest.approx(2.0)
    with pytest.raises(InvalidInput):
        ky_fan(M, 0)
    with pytest.raises(SingularTopSpace):
        cond_k(SymMatrix.diag([1.0, 0.0]), 2)


def test_containers_validate():
    with pytest.raises(InvalidInput):
        SymMatrix(np.ones((2, 3)))
    with pytest.raises(InvalidInput):
        SymMatrix(np.array([[1.0, np.nan], [np.nan, 1.0]]))
    with pytest.raises(InvalidInput):
        Frame(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert Frame(np.eye(3)[:, :2]).cols == 2


def test_eigenspace_split_ties_go_large():
    large, small = eigenspace_split(SymMatrix.diag([3.0, 2.0, 1.0]), 2.0)
    assert large.cols == 2
    assert small.cols == 1
    assert_allclose(np.abs(small.columns[:, 0]), [0.0, 0.0, 1.0], atol=1e-12)


def test_deflate_projector():
    P = deflate_projector(identity_projector(3), np.array([1.0, 0.0, 0.0]))
    assert P.rank == 2
    assert_allclose(P.matrix, np.diag([0.0, 1.0, 1.0]), atol=1e-15)

    with pytest.raises(OracleContractViolation, match="outside span"):
        deflate_projector(P, np.array([1.0, 0.0, 0.0]), step=2)
    with pytest.raises(OracleContractViolation, match="norm"):
        deflate_projector(P, np.array([0.0, 2.0, 0.0]))


def test_subspace_overlap_of_identical_frames():
    U = random_frame(6, 3, np.random.default_rng(2))
    frob, top = subspace_overlap(U, U)
    assert frob == pytest.approx(3.0)
    assert top == pytest.approx(1.0)


def test_psd_sqrt_and_random_orthogonal():
    rng = np.random.default_rng(5)
    M = random_psd(5, rng)
    root = psd_sqrt(M)
    assert_allclose(root @ root, M.entries, atol=1e-10)
    Q = random_orthogonal(5, rng)
    assert_allclose(Q.T @ Q, np.eye(5), atol=1e-12)
    with pytest.raises(InvalidInput):
        psd_sqrt(np.diag([1.0, -1.0]))


@settings(max_examples=25, deadline=None)
@given(seed=SEEDS, d=st.integers(min_value=3, max_value=8))
def test_classical_facts_hold(seed, d):
    rng = np.random.default_rng(seed)
    M = random_psd(d, rng)
    r = int(rng.integers(1, d))
    assert interlacing_slack(M, random_frame(d, r, rng)) >= -1e-9
    assert best_proj_slack(M, random_projector(d, d - r, rng)) >= -1e-9
    D = rng.standard_normal((d, d))
    assert weyl_slack(M, (D + D.T) / 2.0) >= -1e-9
    assert trace_cs_slack(rng.standard_normal((d, d)), rng.standard_normal((d, d))) >= -1e-9
    lower = random_psd(d, rng).entries
    assert loewner_trace_slack(lower, lower + random_psd(d, rng).entries, M) >= -1e-9
    w = rng.dirichlet(np.ones(d))
    assert generalized_mean_slack(rng.uniform(0.1, 2.0, d), w, 3.0) >= -1e-12


def main():
    """Run linear algebra core tests"""
    print("🧪 Linear Algebra Core Test Suite")
    print("=" * 50)

    tests = [
        ("Eigen Sort Order", test_eig_sym_sorts_and_fixes_signs),
        ("Jacobi vs LAPACK", test_jacobi_matches_lapack),
        ("Jacobi Default", test_jacobi_is_default_solver),
        ("Jacobi Round Robin", test_jacobi_round_robin_odd_and_even),
        ("Unknown Solver", test_unknown_solver_rejected),
        ("Eigen Reconstruction", test_eig_sym_reconstructs),
        ("Ky Fan & Condition", test_ky_fan_and_cond_k),
        ("Container Validation", test_containers_validate),
        ("Eigenspace Split", test_eigenspace_split_ties_go_large),
        ("Projector Deflation", test_deflate_projector),
        ("Subspace Overlap", test_subspace_overlap_of_identical_frames),
        ("PSD Root & Rotations", test_psd_sqrt_and_random_orthogonal),
        ("Classical Facts", test_classical_facts_hold),
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
