#!/usr/bin/env python3
"""
ePCA / cPCA Approximation Metrics

Measures how good an orthonormal frame U is as a k-PCA of a PSD target M:

- energy (ePCA): epsilon = 1 - <UU^T, M> / ||M||_k
- correlation (cPCA): Delta = ||(V^{<(1-Gamma) lambda_k(M)})^T U||_F^2

plus the conversions between the two, the head guarantee, the gap-free
Wedin-style decomposition identity, and the closed-form parameter bounds of
the cPCA composition lemmas (two-block, gapped, dyadic, well-conditioned).

Usage:
    from pca_metrics import epca_error, cpca_mass

    report = epca_error(M, U)
    print(report.epsilon_achieved)
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from linalg_core import (
    Frame,
    SymMatrix,
    as_frame,
    as_sym,
    eig_sym,
    eigenspace_split,
    eigenvalues,
    op_norm,
    subspace_overlap,
)
from pca_config import SINGULAR_TOL, SPAN_TOL
from pca_errors import DegenerateResidual, DegenerateTarget, InvalidInput, OracleContractViolation


@dataclass(frozen=True)
class EpcaReport:
    """Captured energy of U against the Ky Fan k-norm"""

    energy: float
    ky_fan_k: float
    epsilon_achieved: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class CpcaReport:
    """Leaked Frobenius mass of U onto the small eigenspace"""

    gamma: float
    delta_achieved: float
    threshold: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class HeadGuarantee:
    """(h, omega, Delta)-head guarantee, with the measured eigenvalue ratio"""

    h: int
    omega: float
    delta: float
    ratio: float = 1.0
    ratio_bound: float = 1.0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def epca_error(M: Union[SymMatrix, np.ndarray], U: Union[Frame, np.ndarray]) -> EpcaReport:
    """
    Energy error of U as a k-PCA of M, k = cols(U)

    Args:
        M: PSD target
        U: Orthonormal d x k frame

    Returns:
        EpcaReport; U is an eps-k-ePCA iff epsilon_achieved <= eps
    """
    M, U = as_sym(M), as_frame(U)
    k = U.cols
    if not 1 <= k <= M.dim:
        raise InvalidInput(f"frame has {k} columns, expected 1..{M.dim}")
    top = float(np.sum(eigenvalues(M)[:k]))
    if top <= SINGULAR_TOL:
        raise DegenerateTarget(f"||M||_{k} = {top:.3e} leaves nothing to capture")
    energy = float(np.trace(M.quad(U)))
    return EpcaReport(energy=energy, ky_fan_k=top, epsilon_achieved=1.0 - energy / top)


def cpca_mass(M: Union[SymMatrix, np.ndarray], U: Union[Frame, np.ndarray], Gamma: float) -> CpcaReport:
    """
    Correlation error of U as a k-PCA of M at gap parameter Gamma

    Eigenvalues exactly on the threshold count as large.

    Args:
        M: PSD target
        U: Orthonormal d x k frame
        Gamma: Gap parameter in [0, 1]

    Returns:
        CpcaReport with Delta = ||(V^{<(1-Gamma) lambda_k})^T U||_F^2
    """
    M, U = as_sym(M), as_frame(U)
    if not 0.0 <= Gamma <= 1.0:
        raise InvalidInput(f"Gamma={Gamma} outside [0, 1]")
    k = U.cols
    if not 1 <= k <= M.dim:
        raise InvalidInput(f"frame has {k} columns, expected 1..{M.dim}")
    spectrum = eig_sym(M)
    lam_k = float(spectrum.eigenvalues[k - 1])
    if lam_k <= SINGULAR_TOL:
        raise DegenerateTarget(f"lambda_{k} = {lam_k:.3e} is not positive")
    threshold = (1.0 - Gamma) * lam_k
    _, small = eigenspace_split(M, threshold, spectrum=spectrum)
    mass, _ = subspace_overlap(small, U)
    return CpcaReport(gamma=Gamma, delta_achieved=mass, threshold=threshold)


def etoc_convert(epsilon: float, M: Union[SymMatrix, np.ndarray], k: int, Gamma: float) -> float:
    """cPCA mass guaranteed for an eps-k-ePCA: eps ||M||_k / (Gamma lambda_k)"""
    if not 0.0 < Gamma < 1.0:
        raise InvalidInput(f"Gamma={Gamma} must lie in (0, 1)")
    M = as_sym(M)
    if not 1 <= k <= M.dim:
        raise InvalidInput(f"k={k} outside [1, {M.dim}]")
    lam = eigenvalues(M)
    if lam[k - 1] <= SINGULAR_TOL:
        raise DegenerateTarget(f"lambda_{k} = {lam[k - 1]:.3e} is not positive")
    return float(epsilon * np.sum(lam[:k]) / (Gamma * lam[k - 1]))


def ctoe_convert(Delta: float, Gamma: float) -> float:
    """
    ePCA error guaranteed for a (Delta, Gamma)-1-cPCA

    Only the k = 1 conversion is provided; no k > 1 analog is claimed.
    """
    if not (0.0 <= Delta <= 1.0 and 0.0 <= Gamma <= 1.0):
        raise InvalidInput("Delta and Gamma must lie in [0, 1]")
    return Gamma + Delta


def deflated_spectrum(M: SymMatrix, U: Frame) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenpairs of (I - UU^T) M (I - UU^T) restricted to the complement of U

    Returns:
        Tuple of (eigenvalues nonincreasing, d x (d - r) eigenvectors orthogonal to U)
    """
    d, r = M.dim, U.cols
    if r == 0:
        spectrum = eig_sym(M)
        return spectrum.eigenvalues.copy(), spectrum.eigenvectors.columns.copy()
    complement = U.complement_projector().span_frame().columns
    # the span frame of I - UU^T is orthogonal to U up to rounding
    complement = complement - U.columns @ (U.columns.T @ complement)
    complement, _ = np.linalg.qr(complement)
    inner = eig_sym(complement.T @ M.entries @ complement)
    return inner.eigenvalues.copy(), complement @ inner.eigenvectors.columns


def wedin_residual(
    M: Union[SymMatrix, np.ndarray],
    U: Union[Frame, np.ndarray],
    gamma: float,
    gamma2: float,
    k2: int = 1,
) -> float:
    """
    Frobenius residual of the gap-free Wedin-style decomposition identity

    With L = V^{>=(1-gamma) lambda_k}(M), S its complement (k = r + k2),
    M~ = (I - UU^T) M (I - UU^T) and L~ = V^{>=(1-gamma2) lambda_k2}(M~)
    chosen orthogonal to U:

        S^T L~ = (I - S^T U U^T S) Sigma S^T L~ Lam~^-1 - S^T U U^T L Lam L^T L~ Lam~^-1

    Args:
        M: PSD target
        U: Orthonormal d x r frame
        gamma: Gap parameter for L
        gamma2: Gap parameter for L~
        k2: Rank used to place the threshold of L~

    Returns:
        ||LHS - RHS||_F
    """
    M, U = as_sym(M), as_frame(U)
    d, r = M.dim, U.cols
    k = r + k2
    if k2 < 1 or k > d:
        raise InvalidInput(f"need 1 <= k2 and r + k2 <= d, got r={r}, k2={k2}, d={d}")

    spectrum = eig_sym(M)
    lam_k = spectrum.eigenvalues[k - 1]
    mask = spectrum.eigenvalues >= (1.0 - gamma) * lam_k
    L, S = spectrum.eigenvectors.columns[:, mask], spectrum.eigenvectors.columns[:, ~mask]
    Lam, Sig = np.diag(spectrum.eigenvalues[mask]), np.diag(spectrum.eigenvalues[~mask])

    tvals, tvecs = deflated_spectrum(M, U)
    tmask = tvals >= (1.0 - gamma2) * tvals[k2 - 1]
    Lt, Lamt_vals = tvecs[:, tmask], tvals[tmask]
    if np.min(np.abs(Lamt_vals)) <= SINGULAR_TOL:
        raise DegenerateResidual("selected eigenvalues of the deflated matrix are singular")
    Lamt_inv = np.diag(1.0 / Lamt_vals)

    u = U.columns
    StU = S.T @ u
    lhs = S.T @ Lt
    rhs = (np.eye(S.shape[1]) - StU @ StU.T) @ Sig @ S.T @ Lt @ Lamt_inv - StU @ (u.T @ L) @ Lam @ L.T @ Lt @ Lamt_inv
    return float(np.linalg.norm(lhs - rhs))


def compose_bound(
    M: Union[SymMatrix, np.ndarray],
    U1: Union[Frame, np.ndarray],
    U2: Union[Frame, np.ndarray],
    d1: float,
    d2: float,
    g1: float,
    g2: float,
) -> float:
    """
    Delta of the two-block cPCA composition lemma

    Delta = d1 + 2 d2 + (4 d1 / g2^2) ||U1^T L Lam L^T L~||_op^2 / lambda_k(M)^2,
    and [U1 U2] is then a (Delta, max(g1, 2 g2))-k-cPCA of M.

    Args:
        M: PSD target
        U1: (d1, g1)-k1-cPCA of M
        U2: (d2, g2)-k2-cPCA of the deflated M, orthogonal to U1
        d1, d2, g1, g2: Parameters in [0, 1/10]

    Returns:
        The lemma's Delta
    """
    for name, value in (("d1", d1), ("d2", d2), ("g1", g1), ("g2", g2)):
        if not 0.0 <= value <= 0.1:
            raise InvalidInput(f"{name}={value} outside [0, 1/10]")
    M, U1, U2 = as_sym(M), as_frame(U1), as_frame(U2)
    cross = np.max(np.abs(U1.columns.T @ U2.columns)) if U1.cols and U2.cols else 0.0
    if cross > SPAN_TOL:
        raise OracleContractViolation(f"U2 is not orthogonal to U1 (max |U1^T U2| = {cross:.3e})")

    k1, k2 = U1.cols, U2.cols
    k = k1 + k2
    gamma = max(g1, 2.0 * g2)
    spectrum = eig_sym(M)
    lam_k = spectrum.eigenvalues[k - 1]
    if lam_k <= SINGULAR_TOL:
        raise DegenerateTarget(f"lambda_{k} = {lam_k:.3e} is not positive")
    if d1 == 0.0:
        return d1 + 2.0 * d2
    if g2 == 0.0:
        return math.inf

    mask = spectrum.eigenvalues >= (1.0 - gamma) * lam_k
    L = spectrum.eigenvectors.columns[:, mask]
    Lam = np.diag(spectrum.eigenvalues[mask])
    tvals, tvecs = deflated_spectrum(M, U1)
    Lt = tvecs[:, tvals >= (1.0 - g2) * tvals[k2 - 1]]
    cross_term = op_norm(U1.columns.T @ L @ Lam @ L.T @ Lt)
    return float(d1 + 2.0 * d2 + (4.0 * d1 / g2**2) * cross_term**2 / lam_k**2)


def find_head_index(M_residual: Union[SymMatrix, np.ndarray], m: int, gamma: float, delta: float = 0.0) -> HeadGuarantee:
    """
    Largest h in [1, m-1] with lambda_{h+1} <= (1 - gamma) lambda_h (else 0)

    Args:
        M_residual: Deflated target
        m: Block size
        gamma: Gap parameter in (0, 1/10]
        delta: Mass parameter carried into the guarantee

    Returns:
        HeadGuarantee(h, 2 m gamma, delta) with the measured lambda_{h+1}/lambda_m
    """
    M = as_sym(M_residual)
    if not 1 <= m <= M.dim:
        raise InvalidInput(f"m={m} outside [1, {M.dim}]")
    if not 0.0 < gamma <= 0.1:
        raise InvalidInput(f"gamma={gamma} outside (0, 1/10]")
    lam = eigenvalues(M)
    if lam[m - 1] <= SINGULAR_TOL:
        raise DegenerateTarget(f"lambda_{m} = {lam[m - 1]:.3e} is not positive")

    h = 0
    for i in range(m - 1, 0, -1):
        if lam[i] <= (1.0 - gamma) * lam[i - 1]:
            h = i
            break

    ratio = float(lam[h] / lam[m - 1])
    ratio_bound = float((1.0 - gamma) ** (-(m - h - 1)))
    if ratio > ratio_bound * (1.0 + 1e-12):
        raise DegenerateTarget(f"head ratio {ratio:.6f} exceeds telescoped bound {ratio_bound:.6f}")
    return HeadGuarantee(h=h, omega=2.0 * m * gamma, delta=delta, ratio=ratio, ratio_bound=ratio_bound)


def check_head_guarantee(
    M: Union[SymMatrix, np.ndarray], U: Union[Frame, np.ndarray], h: int, omega: float, Delta: float
) -> bool:
    """True iff U satisfies an (h, omega, Delta)-head guarantee for M"""
    M, U = as_sym(M), as_frame(U)
    spectrum = eig_sym(M)
    lam = spectrum.eigenvalues
    k = U.cols
    if not 0 <= h < M.dim:
        raise InvalidInput(f"h={h} outside [0, {M.dim - 1}]")
    if lam[k - 1] <= SINGULAR_TOL:
        raise DegenerateTarget(f"lambda_{k} = {lam[k - 1]:.3e} is not positive")

    ratio_ok = lam[h] / lam[k - 1] <= 1.0 + omega + 1e-12
    if h == 0:
        return bool(ratio_ok)
    if not lam[h - 1] > lam[h]:
        return False
    head, _ = eigenspace_split(M, lam[h - 1], spectrum=spectrum)
    u_perp = U.complement_projector().span_frame()
    mass, _ = subspace_overlap(head, u_perp)
    return bool(ratio_ok and mass <= Delta + 1e-12)


# Closed-form bounds of the composition lemmas


def gap_merge_applicable(M: Union[SymMatrix, np.ndarray], k1: int, k: int, g1: float, g2: float, d1: float) -> bool:
    """(1 - g1) lambda_k1 > lambda_{k1+1} and d1 <= g2^2 / (16 kappa_k^2)"""
    lam = eigenvalues(M)
    if lam[k - 1] <= SINGULAR_TOL:
        return False
    kappa = lam[0] / lam[k - 1]
    return bool((1.0 - g1) * lam[k1 - 1] > lam[k1] and d1 <= g2**2 / (16.0 * kappa**2))


def gap_merge_bound(d1: float, d2: float) -> float:
    """Mass of the merged block across a spectral gap: 2 (d1 + d2)"""
    return 2.0 * (d1 + d2)


def opnorm_close_bound(Delta: float, lambda1: float) -> float:
    """4 sqrt(Delta) lambda_1"""
    return 4.0 * math.sqrt(Delta) * lambda1


def opnorm_close_gap(M: Union[SymMatrix, np.ndarray], U: Union[Frame, np.ndarray], V: Union[Frame, np.ndarray]) -> float:
    """||(I - UU^T) M (I - UU^T) - (I - VV^T) M (I - VV^T)||_op"""
    M, U, V = as_sym(M), as_frame(U), as_frame(V)
    pu, pv = U.complement_projector().matrix, V.complement_projector().matrix
    return op_norm(pu @ M.entries @ pu - pv @ M.entries @ pv)


def gap_comp_params(r: int, delta: float, gamma: float) -> Tuple[float, float]:
    """(4 r^2 delta, 2 r gamma) for r gapped blocks"""
    return 4.0 * r * r * delta, 2.0 * r * gamma


def dyadic_schedule(r: int, delta: float, gamma: float) -> List[Tuple[int, float, float]]:
    """Per-level (level, delta_l, gamma_l) = (l, 4^(L-l) delta, 2^(L-l) gamma), L = ceil(log2 r)"""
    depth = math.ceil(math.log2(r)) if r > 1 else 0
    return [(level, 4.0 ** (depth - level) * delta, 2.0 ** (depth - level) * gamma) for level in range(depth + 1)]


def nogap_merge_one_bound(k1: int, d1: float, d2: float, g2: float) -> Tuple[float, float]:
    """(130 k1^2 d1 + 2 d2, 2 g2); needs d1 <= g2^2 / 288"""
    if d1 > g2**2 / 288.0:
        raise InvalidInput(f"d1={d1} exceeds g2^2/288 = {g2 ** 2 / 288.0:.3e}")
    return 130.0 * k1 * k1 * d1 + 2.0 * d2, 2.0 * g2


def nogap_merge_two_bound(k: int, delta: float, gamma: float) -> Tuple[float, float]:
    """((132 k^2)^ceil(log2 k) delta, 2^ceil(log2 k) gamma); needs Delta <= Gamma^2 / 288"""
    depth = math.ceil(math.log2(k)) if k > 1 else 0
    Delta = (132.0 * k * k) ** depth * delta
    Gamma = 2.0**depth * gamma
    if Delta > Gamma**2 / 288.0:
        raise InvalidInput(f"Delta={Delta:.3e} exceeds Gamma^2/288 = {Gamma ** 2 / 288.0:.3e}")
    return Delta, Gamma


def per_call_errors(R: SymMatrix, u: np.ndarray, gamma: Optional[float] = None) -> Dict[str, Optional[float]]:
    """Measured ePCA error and (if gamma is given) cPCA mass of a single answer u against PMP"""
    spectrum = eig_sym(R)
    top = float(spectrum.eigenvalues[0])
    if top <= SINGULAR_TOL:
        return {"epsilon": 0.0, "delta": 0.0 if gamma is not None else None, "top": top}
    epsilon = 1.0 - float(u @ R.entries @ u) / top
    delta = None
    if gamma is not None:
        _, small = eigenspace_split(R, (1.0 - gamma) * top, spectrum=spectrum)
        delta, _ = subspace_overlap(small, u.reshape(-1, 1))
    return {"epsilon": epsilon, "delta": delta, "top": top}
