#!/usr/bin/env python3
"""
Dense Symmetric Linear Algebra Core

Deterministic building blocks used by every other pca-lab module: symmetric
matrices, orthonormal frames, orthogonal projectors, eigendecompositions with
a fixed sign convention, Ky Fan norms, k-condition numbers, eigenspace
splitting and subspace overlaps. The classical facts the deflation analysis
relies on (Cauchy interlacing, Weyl, trace Cauchy-Schwarz, generalized mean,
Loewner trace monotonicity) are exposed as slack functions so they can be
checked on random instances.

Usage:
    from linalg_core import SymMatrix, eig_sym, ky_fan

    M = SymMatrix.diag([3.0, 1.0, 2.0])
    spectrum = eig_sym(M)
    top_two = ky_fan(M, 2)

Features:
    - Two interchangeable eigensolvers: cyclic Jacobi (default) and LAPACK (scipy)
    - Sign convention: largest-magnitude entry of each eigenvector is positive
    - Frozen dataclasses; arrays are made read-only after construction
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from pca_config import EIGEN_SOLVER, JACOBI_TOL, NORM_TOL, ORTHO_TOL, SINGULAR_TOL, SPAN_TOL
from pca_errors import InvalidInput, OracleContractViolation, SingularTopSpace

ArrayLike = Union[np.ndarray, Sequence[Sequence[float]]]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SymMatrix:
    """Dense real symmetric d x d matrix (target M or covariance Sigma)"""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise InvalidInput(f"SymMatrix needs a non-empty square array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidInput("SymMatrix entries must be finite")
        object.__setattr__(self, "entries", _frozen((a + a.T) / 2.0))

    @classmethod
    def diag(cls, values: Sequence[float]) -> "SymMatrix":
        return cls(np.diag(np.asarray(values, dtype=np.float64)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def frob_norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def compress(self, projector: "Projector") -> "SymMatrix":
        """Return P M P"""
        p = projector.matrix
        return SymMatrix(p @ self.entries @ p)

    def quad(self, frame: Union["Frame", np.ndarray]) -> np.ndarray:
        """Return U^T M U"""
        u = frame.columns if isinstance(frame, Frame) else np.asarray(frame, dtype=np.float64)
        return u.T @ self.entries @ u


@dataclass(frozen=True)
class Frame:
    """Orthonormal d x r matrix, stored column-wise"""

    columns: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.columns, dtype=np.float64)
        if f.ndim == 1:
            f = f.reshape(-1, 1)
        if f.ndim != 2 or f.shape[1] > f.shape[0]:
            raise InvalidInput(f"Frame needs a d x r array with r <= d, got shape {f.shape}")
        if not np.all(np.isfinite(f)):
            raise InvalidInput("Frame entries must be finite")
        if f.shape[1] > 0:
            gram_err = np.max(np.abs(f.T @ f - np.eye(f.shape[1])))
            if gram_err > ORTHO_TOL:
                raise InvalidInput(f"Frame columns are not orthonormal (max Gram error {gram_err:.3e})")
        object.__setattr__(self, "columns", _frozen(f))

    @classmethod
    def orthonormalize(cls, vectors: ArrayLike) -> "Frame":
        """Build a Frame spanning the columns of `vectors` via QR"""
        v = np.asarray(vectors, dtype=np.float64)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        q, r = np.linalg.qr(v)
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1.0
        return cls(q * signs)

    @classmethod
    def empty(cls, d: int) -> "Frame":
        return cls(np.zeros((d, 0)))

    @property
    def rows(self) -> int:
        return self.columns.shape[0]

    @property
    def cols(self) -> int:
        return self.columns.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.columns[:, i].copy()

    def hstack(self, other: "Frame") -> "Frame":
        return Frame(np.hstack([self.columns, other.columns]))

    def span_projector(self) -> "Projector":
        return Projector(SymMatrix(self.columns @ self.columns.T), self.cols)

    def complement_projector(self) -> "Projector":
        return Projector(SymMatrix(np.eye(self.rows) - self.columns @ self.columns.T), self.rows - self.cols)


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted nonincreasing with matching eigenvector Frame"""

    eigenvalues: np.ndarray
    eigenvectors: Frame

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def top(self, k: int) -> Frame:
        return Frame(self.eigenvectors.columns[:, :k])

    def reconstruction_error(self, M: SymMatrix) -> float:
        v = self.eigenvectors.columns
        return float(np.linalg.norm(v @ np.diag(self.eigenvalues) @ v.T - M.entries))


@dataclass(frozen=True)
class Projector:
    """Orthogonal projection matrix with its rank"""

    matrix: np.ndarray
    rank: int

    def __post_init__(self):
        m = self.matrix.entries if isinstance(self.matrix, SymMatrix) else SymMatrix(self.matrix).entries
        d = m.shape[0]
        if not 0 <= self.rank <= d:
            raise InvalidInput(f"Projector rank {self.rank} outside [0, {d}]")
        idem_err = np.max(np.abs(m @ m - m))
        if idem_err > 1e-10:
            raise InvalidInput(f"Projector is not idempotent (max error {idem_err:.3e})")
        if abs(np.trace(m) - self.rank) > 1e-8:
            raise InvalidInput(f"Projector trace {np.trace(m):.6f} does not match rank {self.rank}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def span_frame(self) -> Frame:
        """Orthonormal basis of span(P)"""
        spectrum = eig_sym(SymMatrix(self.matrix))
        return Frame(spectrum.eigenvectors.columns[:, : self.rank])

    def span_distance(self, u: np.ndarray) -> float:
        return float(np.linalg.norm(self.matrix @ u - u))


def as_sym(M: Union[SymMatrix, ArrayLike]) -> SymMatrix:
    return M if isinstance(M, SymMatrix) else SymMatrix(np.asarray(M, dtype=np.float64))


def as_frame(U: Union[Frame, ArrayLike]) -> Frame:
    return U if isinstance(U, Frame) else Frame(np.asarray(U, dtype=np.float64))


def identity_projector(d: int) -> Projector:
    return Projector(SymMatrix(np.eye(d)), d)


def _round_robin(d: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    # d (or d + 1 with a dummy index) players, each round pairs every index once
    m = d + (d % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < d and q < d]
        if pairs:
            P, Q = (np.array(side, dtype=np.intp) for side in zip(*pairs))
            rounds.append((P, Q))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(a: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = 100) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cyclic Jacobi eigensolver for a dense symmetric matrix

    Each sweep walks a fixed round-robin ordering of the (p, q) pairs. Pairs in
    one round are disjoint, so their plane rotations are applied together.
    Stops when the off-diagonal Frobenius mass is at most tol * ||a||_F.

    Args:
        a: Symmetric d x d array
        tol: Relative off-diagonal stopping threshold
        max_sweeps: Upper bound on full sweeps

    Returns:
        Tuple of (unsorted eigenvalues, eigenvector columns)
    """
    a = np.array(a, dtype=np.float64, copy=True)
    d = a.shape[0]
    v = np.eye(d)
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    rounds = _round_robin(d)

    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * scale:
            return np.diag(a).copy(), v
        for P, Q in rounds:
            apq = a[P, Q]
            active = apq != 0.0
            if not active.any():
                continue
            theta = (a[Q, Q] - a[P, P]) / (2.0 * np.where(active, apq, 1.0))
            sign = np.where(theta >= 0.0, 1.0, -1.0)
            t = np.where(active, sign / (np.abs(theta) + np.hypot(theta, 1.0)), 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            col_p, col_q = a[:, P].copy(), a[:, Q].copy()
            a[:, P] = c * col_p - s * col_q
            a[:, Q] = s * col_p + c * col_q
            row_p, row_q = a[P, :].copy(), a[Q, :].copy()
            a[P, :] = c[:, None] * row_p - s[:, None] * row_q
            a[Q, :] = s[:, None] * row_p + c[:, None] * row_q
            a[P, Q] = 0.0
            a[Q, P] = 0.0

            vec_p, vec_q = v[:, P].copy(), v[:, Q].copy()
            v[:, P] = c * vec_p - s * vec_q
            v[:, Q] = s * vec_p + c * vec_q
        a = 0.5 * (a + a.T)

    raise RuntimeError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eig_sym(M: Union[SymMatrix, ArrayLike], solver: Optional[str] = None) -> Spectrum:
    """
    Eigendecomposition with eigenvalues sorted nonincreasing

    Args:
        M: Symmetric matrix (raw arrays are symmetrized and validated)
        solver: 'jacobi' or 'lapack' (default: PCA_LAB_EIGEN_SOLVER, jacobi when unset)

    Returns:
        Spectrum with eigenvector signs fixed so each column's largest-magnitude
        entry is positive
    """
    M = as_sym(M)
    solver = (solver or EIGEN_SOLVER).lower().strip()

    if solver == "lapack":
        values, vectors = scipy.linalg.eigh(M.entries)
    elif solver == "jacobi":
        values, vectors = jacobi_eigh(M.entries)
    else:
        raise ValueError(f"Unknown eigensolver type: {solver}")

    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = _fix_signs(vectors[:, order])
    # one Gram-Schmidt pass keeps V^T V = I within 1e-12 for clustered spectra
    vectors, r = np.linalg.qr(vectors)
    vectors = vectors * np.sign(np.diag(r))
    return Spectrum(values, Frame(vectors))


def eigenvalues(M: Union[SymMatrix, ArrayLike]) -> np.ndarray:
    """Sorted (nonincreasing) eigenvalues only, from the configured solver"""
    entries = as_sym(M).entries
    if EIGEN_SOLVER == "lapack":
        values = scipy.linalg.eigvalsh(entries)
    elif EIGEN_SOLVER == "jacobi":
        values = jacobi_eigh(entries)[0]
    else:
        raise ValueError(f"Unknown eigensolver type: {EIGEN_SOLVER}")
    return np.sort(values)[::-1].copy()


def ky_fan(M: Union[SymMatrix, ArrayLike], k: int) -> float:
    """Sum of the k largest eigenvalues"""
    M = as_sym(M)
    if not 1 <= k <= M.dim:
        raise InvalidInput(f"k={k} outside [1, {M.dim}]")
    return float(np.sum(eig_sym(M).eigenvalues[:k]))


def cond_k(M: Union[SymMatrix, ArrayLike], k: int) -> float:
    """k-condition number lambda_1 / lambda_k"""
    M = as_sym(M)
    if not 1 <= k <= M.dim:
        raise InvalidInput(f"k={k} outside [1, {M.dim}]")
    values = eig_sym(M).eigenvalues
    if values[k - 1] <= SINGULAR_TOL:
        raise SingularTopSpace(f"lambda_{k} = {values[k - 1]:.3e} is not positive")
    return float(values[0] / values[k - 1])


def eigenspace_split(
    M: Union[SymMatrix, ArrayLike], threshold: float, spectrum: Optional[Spectrum] = None
) -> Tuple[Frame, Frame]:
    """
    Split R^d into eigenvectors with eigenvalue >= threshold and the rest

    Args:
        M: Symmetric matrix
        threshold: Finite cut; eigenvalues exactly on it go to the first frame
        spectrum: Precomputed eig_sym(M), if available

    Returns:
        Tuple of (Frame_ge, Frame_lt)
    """
    if not np.isfinite(threshold):
        raise InvalidInput("threshold must be finite")
    spectrum = spectrum or eig_sym(M)
    mask = spectrum.eigenvalues >= threshold
    vectors = spectrum.eigenvectors.columns
    return Frame(vectors[:, mask]), Frame(vectors[:, ~mask])


def deflate_projector(P: Projector, u: np.ndarray, step: Optional[int] = None) -> Projector:
    """
    Remove a unit vector u in span(P): P <- P - u u^T

    Args:
        P: Current projector
        u: Unit vector with ||P u - u|| <= 1e-8
        step: Deflation step, used in error messages

    Returns:
        Projector of rank(P) - 1
    """
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    if u.shape[0] != P.dim:
        raise OracleContractViolation(f"vector has length {u.shape[0]}, expected {P.dim}", step)
    if P.rank == 0:
        raise OracleContractViolation("span(P) is already empty", step)
    norm_err = abs(np.linalg.norm(u) - 1.0)
    if norm_err > NORM_TOL:
        raise OracleContractViolation(f"answer norm deviates from 1 by {norm_err:.3e}", step)
    dist = P.span_distance(u)
    if dist > SPAN_TOL:
        raise OracleContractViolation(f"answer lies {dist:.3e} outside span(P)", step)

    # snap u into span(P) so the result stays an exact projector
    u = P.apply(u)
    u = u / np.linalg.norm(u)
    return Projector(SymMatrix(P.matrix - np.outer(u, u)), P.rank - 1)


def subspace_overlap(A: Union[Frame, ArrayLike], B: Union[Frame, ArrayLike]) -> Tuple[float, float]:
    """Return (||A^T B||_F^2, sigma_1(A^T B))"""
    a = A.columns if isinstance(A, Frame) else np.asarray(A, dtype=np.float64).reshape(len(A), -1)
    b = B.columns if isinstance(B, Frame) else np.asarray(B, dtype=np.float64).reshape(len(B), -1)
    if a.shape[0] != b.shape[0]:
        raise InvalidInput(f"row dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    cross = a.T @ b
    if cross.size == 0:
        return 0.0, 0.0
    return float(np.sum(cross * cross)), float(scipy.linalg.svdvals(cross)[0])


def op_norm(A: ArrayLike) -> float:
    """Largest singular value"""
    a = np.asarray(A, dtype=np.float64)
    if a.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(a)[0])


def psd_sqrt(S: Union[SymMatrix, ArrayLike]) -> np.ndarray:
    """Symmetric square root of a PSD matrix"""
    spectrum = eig_sym(S)
    values = spectrum.eigenvalues
    if values[-1] < -1e-10 * max(1.0, abs(values[0])):
        raise InvalidInput(f"matrix is not PSD (lambda_min = {values[-1]:.3e})")
    v = spectrum.eigenvectors.columns
    return v @ np.diag(np.sqrt(np.clip(values, 0.0, None))) @ v.T


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix"""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def random_frame(d: int, r: int, rng: np.random.Generator) -> Frame:
    return Frame.orthonormalize(rng.standard_normal((d, r)))


def random_projector(d: int, rank: int, rng: np.random.Generator) -> Projector:
    if rank == 0:
        return Projector(SymMatrix(np.zeros((d, d))), 0)
    return random_frame(d, rank, rng).span_projector()


def random_psd(d: int, rng: np.random.Generator, rank: Optional[int] = None) -> SymMatrix:
    """Wishart-style PSD matrix G G^T / m"""
    m = rank or d
    g = rng.standard_normal((d, m))
    return SymMatrix(g @ g.T / m)


# Classical facts, each reported as a minimum slack (>= -tol means it holds)


def interlacing_slack(M: Union[SymMatrix, ArrayLike], V: Union[Frame, ArrayLike]) -> float:
    """lambda_{d-r+i}(M) <= lambda_i(V^T M V) <= lambda_i(M) for i in [r]"""
    M, V = as_sym(M), as_frame(V)
    lam = eigenvalues(M)
    mu = eigenvalues(M.quad(V))
    d, r = M.dim, V.cols
    lower = mu - lam[d - r :]
    upper = lam[:r] - mu
    return float(min(lower.min(), upper.min()))


def best_proj_slack(M: Union[SymMatrix, ArrayLike], P: Projector) -> float:
    """||P M P||_op - lambda_{r+1}(M) for a rank-(d - r) projector P"""
    M = as_sym(M)
    r = M.dim - P.rank
    if r >= M.dim:
        raise InvalidInput("best_proj needs a projector of positive rank")
    return op_norm(M.compress(P).entries) - float(eigenvalues(M)[r])


def weyl_slack(M: Union[SymMatrix, ArrayLike], D: Union[SymMatrix, ArrayLike]) -> float:
    """min_j ||D||_op - |lambda_j(M + D) - lambda_j(M)|"""
    M, D = as_sym(M), as_sym(D)
    shift = np.abs(eigenvalues(M.entries + D.entries) - eigenvalues(M))
    return float(op_norm(D.entries) - shift.max())


def trace_cs_slack(A: ArrayLike, B: ArrayLike) -> float:
    """2||A||_F^2 + 2||B||_F^2 - ||A + B||_F^2"""
    a, b = np.asarray(A, dtype=np.float64), np.asarray(B, dtype=np.float64)
    return float(2 * np.sum(a * a) + 2 * np.sum(b * b) - np.sum((a + b) ** 2))


def generalized_mean_slack(x: Sequence[float], w: Sequence[float], p: float) -> float:
    """(sum_i w_i x_i^p)^(1/p) - <w, x> for positive x and a probability vector w"""
    x, w = np.asarray(x, dtype=np.float64), np.asarray(w, dtype=np.float64)
    if p < 1 or np.any(x <= 0) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise InvalidInput("generalized mean needs p >= 1, x > 0 and weights summing to 1")
    return float(np.sum(w * x**p) ** (1.0 / p) - np.dot(w, x))


def loewner_trace_slack(A: ArrayLike, B: ArrayLike, M: ArrayLike) -> float:
    """Tr(B M) - Tr(A M) for A <= B in Loewner order and M PSD"""
    A, B, M = as_sym(A), as_sym(B), as_sym(M)
    if eigenvalues(B.entries - A.entries)[-1] < -1e-10 or eigenvalues(M)[-1] < -1e-10:
        raise InvalidInput("loewner_trace_slack needs A <= B and M >= 0")
    return float(np.trace(B.entries @ M.entries) - np.trace(A.entries @ M.entries))
