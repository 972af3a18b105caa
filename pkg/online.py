#!/usr/bin/env python3
"""
Online Heavy-Tailed k-cPCA

Single-pass pipeline: estimate Tr(Sigma) on a short warm-up, clip every
sample to radius sqrt(R), split the rest of the stream into k equal segments
and run the deflation driver with an Oja oracle per segment. The cPCA
guarantee on the clipped covariance transfers back to Sigma through the
perturbation bound.

Usage:
    from online import SampleStream, StreamConfig, online_kcpca

    cfg = StreamConfig(n=40000, d=16, k=2, Delta=0.02, Gamma=0.5)
    stream = SampleStream.from_sampler("hypercontractive", sigma, n=cfg.n, seed=3)
    U = online_kcpca(stream, cfg)
"""

import math
import warnings
from dataclasses import dataclass
from typing import Any, Iterator, List, Optional, Tuple

import numpy as np

from deflation import DeflationTrace, black_box_pca
from linalg_core import Frame, as_sym, cond_k, eigenvalues, op_norm, psd_sqrt
from oracles import OjaOracle, OracleBudget, oja_sample_size
from pca_config import CLIP_R_CONSTANT, DEFAULT_BETA, MAX_SAMPLES, OJA_N_CONSTANT, say
from pca_errors import BudgetWarning, InvalidInput, PerturbationTooLarge, RegimeRejected
from robust import coordinate_law, load_dataset

STREAM_KINDS = ("gaussian", "hypercontractive", "dataset")
CHUNK_ROWS = 4096


class SampleStream:
    """
    Seeded single-pass stream of samples

    Samples are generated chunk by chunk and handed out once; nothing already
    consumed is kept. Segment boundaries are recorded as consumption counts.
    """

    def __init__(self, dim: int, n_total: int, chunk_source, name: str = "stream"):
        self.dim = dim
        self.n_total = n_total
        self.name = name
        self.consumed = 0
        self.segment_size = n_total
        self.boundaries: List[int] = [0]
        self._chunk_source = chunk_source
        self._chunk_index = 0
        self._buffer = np.empty((0, dim))

    @classmethod
    def from_sampler(
        cls, kind: str, sigma: Any, n: int, seed: int = 0, p: int = 4, q: float = 0.02, ratio: float = 4.0
    ) -> "SampleStream":
        """Stream from a Gaussian or two-level hypercontractive law with covariance sigma"""
        kind = kind.lower().strip()
        if kind not in ("gaussian", "hypercontractive"):
            raise ValueError(f"Unknown stream type: {kind}")
        root = psd_sqrt(as_sym(sigma))
        d = root.shape[0]
        a, b = coordinate_law(q, ratio)

        def source(index: int, rows: int) -> np.ndarray:
            rng = np.random.default_rng([seed, index])
            if kind == "gaussian":
                Z = rng.standard_normal((rows, d))
            else:
                Z = np.where(rng.random((rows, d)) < q, b, a) * rng.choice([-1.0, 1.0], size=(rows, d))
            return Z @ root

        return cls(d, n, source, name=kind)

    @classmethod
    def from_dataset(cls, path: str) -> "SampleStream":
        """Stream the rows of a dataset CSV in file order"""
        points = load_dataset(path).points

        def source(index: int, rows: int) -> np.ndarray:
            start = index * CHUNK_ROWS
            return points[start : start + rows]

        return cls(points.shape[1], points.shape[0], source, name="dataset")

    @property
    def remaining(self) -> int:
        return self.n_total - self.consumed

    def mark_segment(self) -> None:
        self.boundaries.append(self.consumed)

    def _refill(self) -> None:
        produced = self._chunk_index * CHUNK_ROWS
        rows = min(CHUNK_ROWS, self.n_total - produced)
        if rows <= 0:
            return
        self._buffer = self._chunk_source(self._chunk_index, rows)
        self._chunk_index += 1

    def take(self, count: int, batch_size: int = 1) -> Iterator[np.ndarray]:
        """Yield up to `count` fresh samples in batches; stops early when the stream is exhausted"""
        left = min(count, self.remaining)
        if left < count:
            warnings.warn(f"{self.name} stream has only {left} of {count} requested samples", BudgetWarning, stacklevel=2)
        while left > 0:
            if self._buffer.shape[0] == 0:
                self._refill()
            size = min(batch_size, left, self._buffer.shape[0])
            batch, self._buffer = self._buffer[:size], self._buffer[size:]
            self.consumed += size
            left -= size
            yield batch
        self.mark_segment()


@dataclass(frozen=True)
class StreamConfig:
    """Targets and calibrated knobs of one online k-cPCA run"""

    n: int
    d: int
    k: int
    Delta: float
    Gamma: float
    p: int = 4
    Cp: float = 2.0
    beta: float = DEFAULT_BETA
    kappa: float = 2.0
    seed: int = 0
    trace: Optional[float] = None
    call_delta: Optional[float] = None
    call_gamma: Optional[float] = None
    clip: bool = True
    batch_size: int = 1
    c_R: float = CLIP_R_CONSTANT

    def __post_init__(self):
        if not 1 <= self.k <= self.d:
            raise InvalidInput(f"k={self.k} outside [1, {self.d}]")
        if not (0.0 < self.Delta < 1.0 and 0.0 < self.Gamma < 1.0):
            raise InvalidInput("Delta and Gamma must lie in (0, 1)")
        if self.p <= 2:
            raise InvalidInput("p must exceed 2")

    @property
    def alpha(self) -> float:
        """(Cp^2 kappa sqrt(k) / (Gamma sqrt(Delta)))^(1/(p-2))"""
        base = self.Cp**2 * self.kappa * math.sqrt(self.k) / (self.Gamma * math.sqrt(self.Delta))
        return base ** (1.0 / (self.p - 2))

    @property
    def delta(self) -> float:
        return self.call_delta if self.call_delta is not None else self.Delta / (4.0 * self.k)

    @property
    def gamma(self) -> float:
        return self.call_gamma if self.call_gamma is not None else self.Gamma / (2.0 * self.k)

    def radius(self, trace: float) -> float:
        """R = c_R alpha Tr(Sigma)"""
        R = self.c_R * self.alpha * trace
        if not R > 0.0:
            raise InvalidInput(f"clip radius R={R} must be positive")
        return R

    def validate(self) -> None:
        if self.Delta * self.kappa**2 > self.Gamma**2:
            raise RegimeRejected(
                f"Delta kappa_k^2 = {self.Delta * self.kappa ** 2:.3e} exceeds Gamma^2 = {self.Gamma ** 2:.3e}"
            )


def estimate_trace(stream: SampleStream, count: int) -> float:
    """Mean ||x||^2 over `count` fresh (unclipped) samples; they are not reused"""
    total, seen = 0.0, 0
    for batch in stream.take(count, batch_size=CHUNK_ROWS):
        total += float(np.sum(batch * batch))
        seen += batch.shape[0]
    if seen == 0:
        raise InvalidInput("no samples left to estimate Tr(Sigma)")
    return total / seen


def corollary_rho(delta: float, gamma: float, lambda_k: float, k: int) -> float:
    """rho = sqrt(delta / (8k)) gamma lambda_k"""
    return math.sqrt(delta / (8.0 * k)) * gamma * lambda_k


def oja_k_rho(Delta: float, Gamma: float, kappa: float, k: int) -> float:
    """rho = (Delta / (24k))^(1/2) Gamma / kappa_k"""
    return math.sqrt(Delta / (24.0 * k)) * Gamma / kappa


def online_sample_size(cfg: StreamConfig, constant: float = OJA_N_CONSTANT) -> int:
    """
    n = c alpha d kappa^2 / (delta gamma^2) log(d / beta), capped at PCA_LAB_MAX_SAMPLES

    A BudgetWarning is raised when the cap applies.
    """
    n = constant * cfg.alpha * cfg.d * cfg.kappa**2 / (cfg.delta * cfg.gamma**2) * math.log(max(cfg.d / cfg.beta, math.e))
    n = int(math.ceil(n))
    if n > MAX_SAMPLES:
        warnings.warn(f"calibrated n={n} exceeds the desk-scale cap {MAX_SAMPLES}", BudgetWarning, stacklevel=2)
        return MAX_SAMPLES
    return n


def online_kcpca_trace(stream: SampleStream, cfg: StreamConfig) -> Tuple[DeflationTrace, float, float]:
    """online_kcpca with the deflation trace, the estimated trace and the clip radius"""
    cfg.validate()
    if stream.dim != cfg.d:
        raise InvalidInput(f"stream dimension {stream.dim} does not match d={cfg.d}")

    budget = OracleBudget(delta=cfg.delta, gamma=cfg.gamma, rng_seed=cfg.seed, beta=cfg.beta)
    if not budget.satisfies_oja_precondition():
        warnings.warn(
            f"per-call (delta, gamma) = ({cfg.delta:.3e}, {cfg.gamma:.3e}) misses delta <= gamma^2/256",
            BudgetWarning,
            stacklevel=2,
        )
    if cfg.n < oja_sample_size(cfg.d, cfg.delta, cfg.gamma, cfg.beta) * cfg.k:
        warnings.warn(f"n={cfg.n} is below the calibrated Oja requirement", BudgetWarning, stacklevel=2)

    warm = min(cfg.n // 10, 10 * cfg.d)
    trace_hat = cfg.trace if cfg.trace is not None else estimate_trace(stream, warm)
    R = cfg.radius(trace_hat) if cfg.clip else None
    stream.segment_size = (min(cfg.n, stream.n_total) - stream.consumed) // cfg.k
    say(f"🔍 Tr(Sigma) ~ {trace_hat:.4f}, R = {R}, segment = {stream.segment_size}")

    oracle = OjaOracle(budget, clip_radius=R, n_samples=stream.segment_size, batch_size=cfg.batch_size, warn_short=False)
    trace = black_box_pca(stream, cfg.k, oracle)
    return trace, trace_hat, (R if R is not None else math.inf)


def online_kcpca(stream: SampleStream, cfg: StreamConfig) -> Frame:
    """
    Online k-cPCA by clipped Oja deflation

    Args:
        stream: i.i.d. mean-zero samples, consumed once
        cfg: Targets and calibration

    Returns:
        Orthonormal d x k frame
    """
    trace, _, _ = online_kcpca_trace(stream, cfg)
    return trace.frame


def perturbation_transfer(Delta_hat: float, Gamma_hat: float, rho: float, lambda_k: float, k: int) -> Tuple[float, float]:
    """
    Transfer a (delta, gamma)-k-cPCA of Sigma_hat to Sigma with ||Sigma - Sigma_hat||_op <= rho

    Returns:
        (8k (rho / (gamma lambda_k))^2 + 2 delta, 2 gamma)

    Raises:
        PerturbationTooLarge: rho >= gamma lambda_k / 2
    """
    if max(Delta_hat, Gamma_hat) > 0.1 or min(Delta_hat, Gamma_hat) < 0.0:
        raise InvalidInput("delta and gamma must lie in [0, 1/10]")
    if rho >= Gamma_hat * lambda_k / 2.0:
        raise PerturbationTooLarge(f"rho={rho:.3e} >= gamma lambda_k / 2 = {Gamma_hat * lambda_k / 2.0:.3e}")
    return 8.0 * k * (rho / (Gamma_hat * lambda_k)) ** 2 + 2.0 * Delta_hat, 2.0 * Gamma_hat


def kappa_transfer_check(Sigma: Any, Sigma_hat: Any, gamma: float, k: int = 1) -> bool:
    """
    kappa_k(Sigma_hat) <= 2 kappa_k(Sigma) when ||Sigma - Sigma_hat||_op <= gamma lambda_k(Sigma) / 2
    """
    Sigma, Sigma_hat = as_sym(Sigma), as_sym(Sigma_hat)
    lam_k = float(eigenvalues(Sigma)[k - 1])
    gap = op_norm(Sigma.entries - Sigma_hat.entries)
    if gap > gamma * lam_k / 2.0 + 1e-12:
        raise PerturbationTooLarge(f"||Sigma - Sigma_hat|| = {gap:.3e} exceeds gamma lambda_k / 2")
    return cond_k(Sigma_hat, k) <= 2.0 * cond_k(Sigma, k) + 1e-9
