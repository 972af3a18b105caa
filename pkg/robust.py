#!/usr/bin/env python3
"""
Robust k-ePCA Under Strong Contamination

Pipeline pieces for PCA when an adversary replaces a fraction eps of the
samples after inspecting them:

- corrupt: plant ceil(eps n) outliers (large-spike, cluster, mirror)
- stability_audit: sampled evidence for the (eps, gamma)-stability sandwich
- clip / clip_rows: radial truncation T_R(x) = min(1, sqrt(R)/||x||) x, with bias and tail bounds
- sampler_subgaussian / sampler_hypercontractive: seeded data sources
- filter_1epca: quantile-threshold soft filter returning a robust top direction
- robust_kpca: deflation with the filter as its 1-PCA oracle, reusing the same samples

Usage:
    from robust import corrupt, robust_kpca, sampler_subgaussian

    clean = sampler_subgaussian(sigma, n=20000, seed=1)
    sample = corrupt(clean, eps=0.05, strategy="large-spike", seed=1)
    U = robust_kpca(sample.points, eps=0.05, gamma=0.15, k=4)
"""

import csv
import json
import math
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from deflation import black_box_pca
from linalg_core import Frame, Projector, SymMatrix, as_sym, eig_sym, psd_sqrt
from oracles import OneOracle, OracleAnswer, OracleQuery
from pca_config import AUDIT_DIRECTIONS, AUDIT_TRIALS, FILTER_ROUNDS_FACTOR, SINGULAR_TOL, say
from pca_errors import FilterCollapse, InvalidInput

CORRUPTION_STRATEGIES = ("large-spike", "cluster", "mirror")


@dataclass
class ContaminatedSample:
    """eps-corrupted points with the ground-truth inlier mask (test-only)"""

    points: np.ndarray
    inlier_mask: np.ndarray
    eps: float
    strategy: str = "none"
    seed: int = 0

    def __post_init__(self):
        n = self.points.shape[0]
        expected = _outlier_count(n, self.eps)
        if int(np.sum(~self.inlier_mask)) != expected:
            raise InvalidInput(f"sample has {int(np.sum(~self.inlier_mask))} outliers, expected {expected}")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class StabilityCertificate:
    eps: float
    gamma: float
    sigma_ref: SymMatrix
    audit: float
    trials: int
    passed: bool


@dataclass(frozen=True)
class ClipConfig:
    """Clip radius R (units of ||x||^2) with the hypercontractivity it was derived from"""

    R: float
    rho: Optional[float] = None
    p: int = 4
    Cp: float = 2.0

    def __post_init__(self):
        if not self.R > 0.0:
            raise InvalidInput(f"clip radius R={self.R} must be positive")

    @classmethod
    def from_corollary(cls, p: int, Cp: float, rho: float, trace: float) -> "ClipConfig":
        return cls(R=clip_radius(p, Cp, rho, trace), rho=rho, p=p, Cp=Cp)


def _outlier_count(n: int, eps: float) -> int:
    return int(math.ceil(eps * n - 1e-9))


# Clipping


def clip(x: np.ndarray, R: float) -> np.ndarray:
    """T_R(x) = min(1, sqrt(R)/||x||) x"""
    if R <= 0.0:
        raise InvalidInput("R must be positive")
    x = np.asarray(x, dtype=np.float64)
    norm = np.linalg.norm(x)
    if norm <= math.sqrt(R):
        return x.copy()
    return x * (math.sqrt(R) / norm)


def clip_rows(X: np.ndarray, R: float) -> np.ndarray:
    if R <= 0.0:
        raise InvalidInput("R must be positive")
    norms = np.linalg.norm(X, axis=1)
    scale = np.minimum(1.0, math.sqrt(R) / np.maximum(norms, SINGULAR_TOL))
    return X * scale[:, None]


def clip_radius(p: int, Cp: float, rho: float, trace: float) -> float:
    """R = (Cp^p / rho)^(2/(p-2)) Tr(Sigma)"""
    if p <= 2 or rho <= 0.0:
        raise InvalidInput("need p > 2 and rho > 0")
    return (Cp**p / rho) ** (2.0 / (p - 2)) * trace


def clipping_bias_bound(p: int, Cp: float, u_sigma_u: float, trace: float, R: float) -> float:
    """u^T (Sigma - E T_R(x) T_R(x)^T) u <= Cp^p (u^T Sigma u) (Tr Sigma / R)^(p/2 - 1)"""
    return Cp**p * u_sigma_u * (trace / R) ** (p / 2.0 - 1.0)


def clipping_tail_bound(p: int, Cp: float, trace: float, R: float) -> float:
    """P(||x|| >= sqrt(R)) <= (Cp (Tr Sigma / R)^(1/2))^(p-2)"""
    return min(1.0, (Cp * math.sqrt(trace / R)) ** (p - 2))


def corollary_tail_bound(p: int, Cp: float, rho: float) -> float:
    """Tail probability at the corollary radius: (rho / Cp^2)^(p/(p-2))"""
    return (rho / Cp**2) ** (p / (p - 2.0))


# Samplers


def sampler_subgaussian(sigma: Any, n: int, seed: int = 0) -> np.ndarray:
    """n Gaussian samples with covariance sigma"""
    root = psd_sqrt(as_sym(sigma))
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, root.shape[0])) @ root


def coordinate_law(q: float = 0.02, ratio: float = 4.0) -> Tuple[float, float]:
    """(a, b) of the unit-variance law: +-a w.p. 1-q, +-b = +-ratio*a w.p. q"""
    if not (0.0 <= q < 1.0 and ratio >= 1.0):
        raise InvalidInput("need q in [0, 1) and ratio >= 1")
    a = 1.0 / math.sqrt((1.0 - q) + q * ratio**2)
    return a, ratio * a


def coordinate_moment_ratio(p: int, q: float = 0.02, ratio: float = 4.0) -> float:
    """Exact (E Z^p)^(1/p) of the coordinate law (unit variance)"""
    a, b = coordinate_law(q, ratio)
    return ((1.0 - q) * a**p + q * b**p) ** (1.0 / p)


def sum_moment_ratio(p: int, q: float = 0.02, ratio: float = 4.0) -> float:
    """
    Upper bound on (E |<Z, c>|^p)^(1/p) over unit c, Z with i.i.d. coordinates

    p = 4 is exact: E <Z, c>^4 = 3 + (m_4 - 3) sum c_i^4 <= max(m_4, 3). Other
    p > 2 condition on |Z|: Khintchine with the Gaussian constant bounds the
    sign average by E|G|^p (sum c_i^2 Z_i^2)^(p/2), and Minkowski in L^(p/2)
    bounds that by E|G|^p m_p.
    """
    if p <= 2:
        raise InvalidInput("need p > 2")
    m_p = coordinate_moment_ratio(p, q, ratio) ** p
    if p == 4:
        return max(m_p, 3.0) ** 0.25
    gaussian = 2.0 ** (p / 2.0) * math.gamma((p + 1) / 2.0) / math.sqrt(math.pi)
    return (gaussian * m_p) ** (1.0 / p)


def sampler_hypercontractive(
    p: int, Cp: float, sigma: Any, n: int, seed: int = 0, q: float = 0.02, ratio: float = 4.0
) -> np.ndarray:
    """
    Sigma^(1/2) times i.i.d. symmetric two-level coordinates

    Every direction u has (E<x,u>^p)^(1/p) <= sum_moment_ratio(p) (u^T Sigma u)^(1/2),
    so the law is (p, Cp)-hypercontractive whenever that bound is at most Cp.

    Raises:
        InvalidInput: The moment bound exceeds Cp, or sigma is not PSD
    """
    moment = sum_moment_ratio(p, q, ratio)
    if moment > Cp:
        raise InvalidInput(f"moment ratio bound {moment:.3f} exceeds Cp={Cp} at p={p}")
    root = psd_sqrt(as_sym(sigma))
    d = root.shape[0]
    rng = np.random.default_rng(seed)
    a, b = coordinate_law(q, ratio)
    Z = np.where(rng.random((n, d)) < q, b, a) * rng.choice([-1.0, 1.0], size=(n, d))
    return Z @ root


def symmetrize(X: np.ndarray) -> np.ndarray:
    """Y_i = (X_{2i-1} - X_{2i}) / sqrt(2)"""
    m = X.shape[0] // 2
    return (X[0 : 2 * m : 2] - X[1 : 2 * m : 2]) / math.sqrt(2.0)


def hypercontractive_ratio(X: np.ndarray, v: np.ndarray, p: int) -> float:
    """Empirical (E<x,v>^p)^(1/p) / (E<x,v>^2)^(1/2)"""
    proj = X @ np.asarray(v, dtype=np.float64)
    second = float(np.mean(proj**2))
    if second <= SINGULAR_TOL:
        raise InvalidInput("direction has zero empirical variance")
    return float(np.mean(np.abs(proj) ** p)) ** (1.0 / p) / math.sqrt(second)


def subgaussian_stability_gamma(eps: float, C: float = 1.0) -> float:
    """gamma = C eps log(1/eps)"""
    if not 0.0 < eps < 1.0:
        raise InvalidInput("eps must lie in (0, 1)")
    return C * eps * math.log(1.0 / eps)


def subgaussian_sample_size(d: int, gamma: float, delta: float, C: float = 1.0) -> int:
    """n = C (d + log(1/delta)) / gamma^2"""
    return int(math.ceil(C * (d + math.log(1.0 / delta)) / gamma**2))


def heavy_tailed_gamma(p: int, Cp: float, eps: float) -> float:
    """gamma = Cp^2 eps^(1 - 2/p)"""
    return Cp**2 * eps ** (1.0 - 2.0 / p)


# Contamination


def corrupt(
    samples: np.ndarray,
    eps: float,
    strategy: str = "large-spike",
    seed: int = 0,
    direction: Optional[np.ndarray] = None,
    scale: Optional[float] = None,
) -> ContaminatedSample:
    """
    Replace exactly ceil(eps n) points

    Args:
        samples: Clean n x d points
        eps: Corruption fraction in [0, 1/2)
        strategy: 'large-spike' (+-scale v), 'cluster' (scale v plus small noise) or 'mirror' (-3 x)
        seed: Choice of replaced indices and outlier signs
        direction: Planted direction v (default: least-variance direction of the clean sample)
        scale: Outlier magnitude (default: 2 sqrt(mean ||x||^2))

    Returns:
        ContaminatedSample
    """
    if not 0.0 <= eps < 0.5:
        raise InvalidInput(f"eps={eps} outside [0, 1/2)")
    if strategy not in CORRUPTION_STRATEGIES:
        raise ValueError(f"Unknown corruption strategy type: {strategy}")
    points = np.array(samples, dtype=np.float64, copy=True)
    n, d = points.shape
    m = _outlier_count(n, eps)
    mask = np.ones(n, dtype=bool)
    if m == 0:
        return ContaminatedSample(points, mask, eps, strategy, seed)

    rng = np.random.default_rng(seed)
    if direction is None:
        direction = eig_sym(points.T @ points / n).eigenvectors.column(d - 1)
    direction = np.asarray(direction, dtype=np.float64) / np.linalg.norm(direction)
    if scale is None:
        scale = 2.0 * math.sqrt(float(np.mean(np.sum(points**2, axis=1))))

    replaced = rng.choice(n, size=m, replace=False)
    mask[replaced] = False
    if strategy == "large-spike":
        signs = rng.choice([-1.0, 1.0], size=m)
        points[replaced] = scale * signs[:, None] * direction[None, :]
    elif strategy == "cluster":
        points[replaced] = scale * direction[None, :] + 0.1 * rng.standard_normal((m, d))
    else:
        donors = rng.choice(np.flatnonzero(mask), size=m, replace=True)
        points[replaced] = -3.0 * points[donors]

    say(f"⚠️  Replaced {m}/{n} points ({strategy})")
    return ContaminatedSample(points, mask, eps, strategy, seed)


# Stability


def loewner_violation(points: np.ndarray, weights: np.ndarray, sigma_ref: Any) -> float:
    """
    Smallest g with (1 - g) Sigma <= Sigma_w <= (1 + g) Sigma, relative to the range of Sigma

    Sigma_w = sum w_i x_i x_i^T / sum w_i. Mass outside range(Sigma) gives inf.
    """
    sigma = as_sym(sigma_ref)
    total = float(np.sum(weights))
    if total <= SINGULAR_TOL:
        return math.inf
    sigma_w = (points * weights[:, None]).T @ points / total
    spectrum = eig_sym(sigma)
    cutoff = SINGULAR_TOL * max(1.0, float(spectrum.eigenvalues[0])) * 1e4
    keep = spectrum.eigenvalues > cutoff
    Q = spectrum.eigenvectors.columns[:, keep]
    outside = sigma_w - Q @ (Q.T @ sigma_w @ Q) @ Q.T
    if np.max(np.abs(outside)) > 1e-9 * max(1.0, float(np.max(np.abs(sigma_w)))):
        return math.inf
    whiten = Q / np.sqrt(spectrum.eigenvalues[keep])[None, :]
    rel = np.linalg.eigvalsh(whiten.T @ sigma_w @ whiten)
    return float(max(rel[-1] - 1.0, 1.0 - rel[0]))


def _audit_weightings(points: np.ndarray, eps: float, sigma: SymMatrix, trials: int, directions: int, rng) -> List[np.ndarray]:
    n = points.shape[0]
    m = int(math.floor(eps * n + 1e-9))
    weightings = [np.ones(n)]
    if m == 0:
        return weightings
    for _ in range(trials):
        w = np.ones(n)
        w[rng.choice(n, size=m, replace=False)] = 0.0
        weightings.append(w)
    spectrum = eig_sym(sigma)
    d = sigma.dim
    picks = sorted(set(list(range(min(directions, d))) + list(range(max(d - directions, 0), d))))
    for j in picks:
        scores = (points @ spectrum.eigenvectors.column(j)) ** 2
        order = np.argsort(scores, kind="stable")
        for removed in (order[-m:], order[:m]):
            w = np.ones(n)
            w[removed] = 0.0
            weightings.append(w)
    return weightings


def stability_audit(
    points: np.ndarray,
    eps: float,
    gamma: float,
    sigma_ref: Any,
    trials: int = AUDIT_TRIALS,
    directions: int = AUDIT_DIRECTIONS,
    seed: int = 0,
) -> StabilityCertificate:
    """
    Sampled evidence of (eps, gamma)-stability with respect to sigma_ref

    Audits the full sample, `trials` random removals of floor(eps n) points and
    greedy removals of the largest / smallest scores along the top and bottom
    `directions` eigenvectors of sigma_ref. PASS is evidence, not proof.
    """
    if trials < 1:
        raise InvalidInput("trials must be at least 1")
    sigma = as_sym(sigma_ref)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for w in _audit_weightings(points, eps, sigma, trials, directions, rng):
        worst = max(worst, loewner_violation(points, w, sigma))
    return StabilityCertificate(eps=eps, gamma=gamma, sigma_ref=sigma, audit=worst, trials=trials, passed=worst <= gamma)


def paired_deflation_audit(
    points: np.ndarray, weights: np.ndarray, sigma_ref: Any, projector: Projector
) -> Tuple[float, float]:
    """Loewner violation of one weighting before and after deflating by P"""
    sigma = as_sym(sigma_ref)
    before = loewner_violation(points, weights, sigma)
    after = loewner_violation(points @ projector.matrix, weights, sigma.compress(projector))
    return before, after


# Filter


def _weighted_quantile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    idx = int(np.searchsorted(cum, q * cum[-1], side="left"))
    return float(values[order][min(idx, len(values) - 1)])


def soft_filter(points: np.ndarray, eps: float, gamma: float) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Quantile-threshold soft filter

    Each round: v = top eigenvector of Sigma_w, scores s_i = <x_i, v>^2,
    tau = weighted (1 - 2 eps)-quantile. Stops when the excess score above tau
    is at most gamma of the total (balanced), when eps n weight is gone, or
    after ceil(4/gamma) rounds; otherwise w_i <- w_i (1 - s_i / s_max) above tau.
    A round that would push the removed weight past eps n is scaled down to
    land exactly on it, so at exit n - sum(w) <= eps n.

    Returns:
        Tuple of (v, weights, rounds)
    """
    n = points.shape[0]
    w = np.ones(n)
    budget = eps * n
    max_rounds = int(math.ceil(FILTER_ROUNDS_FACTOR / max(gamma, 1e-12)))
    rounds = 0
    while True:
        total = float(np.sum(w))
        if total <= SINGULAR_TOL:
            raise FilterCollapse("filter removed all weight")
        sigma_w = (points * w[:, None]).T @ points / total
        v = eig_sym(sigma_w).eigenvectors.column(0).copy()
        removed = n - total
        if eps == 0.0 or rounds >= max_rounds or removed >= budget * (1.0 - 1e-12):
            return v, w, rounds

        scores = (points @ v) ** 2
        tau = _weighted_quantile(scores, w, 1.0 - 2.0 * eps)
        tail = (scores > tau) & (w > 0.0)
        excess = float(np.sum(w[tail] * (scores[tail] - tau)))
        if not tail.any() or excess <= gamma * float(np.sum(w * scores)):
            return v, w, rounds
        s_max = float(np.max(scores[tail]))
        step = w[tail] * scores[tail] / s_max
        room = max(budget - removed, 0.0)
        if float(np.sum(step)) > room:
            step *= room / float(np.sum(step))
        w[tail] = np.maximum(w[tail] - step, 0.0)
        rounds += 1


def filter_1epca(points: np.ndarray, eps: float, gamma: float) -> np.ndarray:
    """Robust top direction of an eps-corrupted, (eps, gamma)-stable sample"""
    v, _, _ = soft_filter(np.asarray(points, dtype=np.float64), eps, gamma)
    return v


class FilterOracle(OneOracle):
    """Adapter to make filter_1epca conform to the OneOracle interface on projected points"""

    def __init__(self, points: np.ndarray, eps: float, gamma: float):
        self.points = np.asarray(points, dtype=np.float64)
        self.eps = eps
        self.gamma = gamma

    def answer(self, query: OracleQuery) -> OracleAnswer:
        P = query.projector
        projected = self.points @ P.matrix
        v, w, rounds = soft_filter(projected, self.eps, self.gamma)
        v = P.apply(v)
        norm = np.linalg.norm(v)
        if norm <= 1e-6:
            return OracleAnswer(P.span_frame().column(0).copy(), {"null_residual": True, "rounds": rounds})
        return OracleAnswer(v / norm, {"rounds": rounds, "removed_mass": float(len(w) - np.sum(w))})

    def get_oracle_name(self) -> str:
        return "filter"


def robust_kpca(points: np.ndarray, eps: float, gamma: float, k: int) -> Frame:
    """
    Robust k-ePCA: deflation with the filter oracle on {P_{i-1} x}

    Args:
        points: eps-corrupted n x d sample (reused by every call)
        eps: Corruption fraction
        gamma: Stability parameter of the clean part
        k: Number of components

    Returns:
        Orthonormal d x k frame
    """
    points = np.asarray(points, dtype=np.float64)
    second_moment = SymMatrix(points.T @ points / points.shape[0])
    trace = black_box_pca(second_moment, k, FilterOracle(points, eps, gamma), certify=False)
    return trace.frame


def robust_kpca_median(points: np.ndarray, eps: float, gamma: float, k: int, repeats: int = 5, seed: int = 0) -> Frame:
    """
    Seed repetition: robust_kpca on `repeats` random halves, returning the
    frame whose projector is closest in total to the others
    """
    if repeats < 1:
        raise InvalidInput("repeats must be positive")
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    rng = np.random.default_rng(seed)
    frames = []
    for _ in range(repeats):
        half = rng.choice(n, size=max(n // 2, 1), replace=False)
        frames.append(robust_kpca(points[half], eps, gamma, k))
    projectors = [f.columns @ f.columns.T for f in frames]
    costs = [sum(np.linalg.norm(Pi - Pj) for Pj in projectors) for Pi in projectors]
    return frames[int(np.argmin(costs))]


# Datasets


def _sidecar_path(path: str) -> str:
    return os.path.splitext(path)[0] + ".json"


def save_dataset(sample: ContaminatedSample, path: str) -> Tuple[str, str]:
    """Write points as CSV (header x0..x{d-1}) plus a JSON sidecar"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fieldnames = [f"x{j}" for j in range(sample.dim)]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        for row in sample.points:
            writer.writerow({name: repr(float(value)) for name, value in zip(fieldnames, row)})

    sidecar = _sidecar_path(path)
    meta: Dict[str, Any] = {
        "eps": sample.eps,
        "seed": sample.seed,
        "strategy": sample.strategy,
        "inlier_mask": [bool(b) for b in sample.inlier_mask],
    }
    with open(sidecar, "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2)
    say(f"📁 Dataset written: {path}")
    return path, sidecar


def load_dataset(path: str) -> ContaminatedSample:
    with open(path, "r", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        columns = reader.fieldnames or []
        if columns != [f"x{j}" for j in range(len(columns))]:
            raise InvalidInput(f"unexpected dataset header: {columns}")
        points = np.array([[float(row[c]) for c in columns] for row in reader], dtype=np.float64)

    sidecar = _sidecar_path(path)
    meta: Dict[str, Any] = {}
    if os.path.exists(sidecar):
        with open(sidecar, "r", encoding="utf-8") as f:
            meta = json.load(f)
    mask = np.array(meta.get("inlier_mask", [True] * points.shape[0]), dtype=bool)
    return ContaminatedSample(
        points, mask, float(meta.get("eps", 0.0)), meta.get("strategy", "none"), int(meta.get("seed", 0))
    )
