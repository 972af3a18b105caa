#!/usr/bin/env python3
"""
Adversarial Constructions

Reproducible instances on which black-box deflation breaks:

- linear regime: M = diag(kappa, 1, 1 - 2 Gamma) with a scripted first answer
  u1 = (sqrt(1-delta), 0, sqrt(delta)) whose exact follow-up drags e3 into U
- square-root regime: M = diag(2, 1, 1 - 2 Gamma) with u1 leaking sqrt(delta/2)
  onto both small coordinates; the exact second answer carries u2_3^2 > Delta

plus the classification of overhead functions g(Delta, kappa) = nu Delta^alpha kappa^beta
and the product-distribution family used for the robust lower bound.

Usage:
    from adversarial import RegimeFunction, regime_classify, find_witness, run_witness

    g = RegimeFunction(nu=1.0, alpha=1.0, beta=1.0)
    if regime_classify(g).label == "INVALID":
        print(run_witness(find_witness(g)))
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from deflation import black_box_pca
from linalg_core import SymMatrix, as_frame, cond_k, eig_sym
from oracles import ExactOracle, OracleQuery, ScriptedOracle
from pca_errors import InvalidInput, NotInRegime
from pca_metrics import cpca_mass

INVALID = "INVALID"
VALID_CANDIDATE = "VALID-CANDIDATE"
MAX_LOWERBOUND_DIM = 64


@dataclass(frozen=True)
class RegimeFunction:
    """g(Delta, kappa) = nu Delta^alpha kappa^beta"""

    nu: float
    alpha: float
    beta: float

    def __post_init__(self):
        if min(self.nu, self.alpha, self.beta) <= 0.0:
            raise InvalidInput("nu, alpha and beta must be positive")

    def __call__(self, Delta: float, kappa: float) -> float:
        return self.nu * Delta**self.alpha * kappa**self.beta


@dataclass(frozen=True)
class CounterexampleInstance:
    """3 x 3 diagonal target with the two answers of the failing deflation"""

    kind: str
    M: SymMatrix
    scripted_answers: Tuple[np.ndarray, np.ndarray]
    Delta: float
    Gamma: float
    delta: float
    kappa: float
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "M": self.M.entries.tolist(),
            "scripted_answers": [list(map(float, u)) for u in self.scripted_answers],
            "Delta": self.Delta,
            "Gamma": self.Gamma,
            "delta": self.delta,
            "kappa": self.kappa,
            "metadata": self.metadata,
        }


@dataclass(frozen=True)
class RegimeClassification:
    label: str
    reason: str
    witness: Optional[Callable[..., CounterexampleInstance]] = None


def _second_answer(M: SymMatrix, u1: np.ndarray) -> np.ndarray:
    complement = as_frame(u1).complement_projector()
    return ExactOracle().answer(OracleQuery(projector=complement, matrix=M, step=2)).vector


def _check_first_answer(M: SymMatrix, u1: np.ndarray, delta: float) -> None:
    mass = cpca_mass(M, as_frame(u1), 0.0).delta_achieved
    if mass > delta + 1e-12:
        raise NotInRegime(f"u1 leaks {mass:.3e} > delta={delta:.3e}; not a (delta, 0)-1-cPCA")


def build_linear_regime_instance(
    Delta: float, kappa: float, C: float = 1.0, g: Optional[RegimeFunction] = None
) -> CounterexampleInstance:
    """
    Instance where the exact second answer is (-sqrt(delta), 0, sqrt(1-delta))

    Args:
        Delta: Target cPCA mass
        kappa: kappa_2 of the instance
        C: Per-call overhead f(2), so delta = Delta / C
        g: Gap function; Gamma = g(Delta, kappa)

    Returns:
        CounterexampleInstance with final cPCA mass 1

    Raises:
        NotInRegime: Gamma / (Delta (kappa - 1)) > min(1/(2C), 1/4) or the eigenpair check fails
    """
    g = g or RegimeFunction(1.0, 2.0, 1.0)
    if not (0.0 < Delta < 1.0 and kappa > 1.0 and C >= 1.0):
        raise InvalidInput("need 0 < Delta < 1, kappa > 1 and C >= 1")
    Gamma = g(Delta, kappa)
    ratio = Gamma / (Delta * (kappa - 1.0))
    if ratio > min(1.0 / (2.0 * C), 0.25) or Gamma >= 0.5:
        raise NotInRegime(f"Gamma/(Delta(kappa-1)) = {ratio:.3e} outside the window at Gamma={Gamma:.3e}")
    delta = Delta / C
    if (1.0 - 2.0 * Gamma) * (1.0 - delta) + kappa * delta < 1.0:
        raise NotInRegime("(-sqrt(delta), 0, sqrt(1-delta)) is not the top eigenvector of the deflated target")

    M = SymMatrix.diag([kappa, 1.0, 1.0 - 2.0 * Gamma])
    u1 = np.array([math.sqrt(1.0 - delta), 0.0, math.sqrt(delta)])
    u2 = np.array([-math.sqrt(delta), 0.0, math.sqrt(1.0 - delta)])
    _check_first_answer(M, u1, delta)
    numeric = _second_answer(M, u1)
    gap = float(min(np.linalg.norm(numeric - u2), np.linalg.norm(numeric + u2)))
    return CounterexampleInstance(
        kind="linear",
        M=M,
        scripted_answers=(u1, u2),
        Delta=Delta,
        Gamma=Gamma,
        delta=delta,
        kappa=cond_k(M, 2),
        metadata={"C": C, "g": [g.nu, g.alpha, g.beta], "u2_numeric_gap": gap},
    )


def sqrt_regime_lambda(delta: float, Gamma: float) -> float:
    """Closed-form top eigenvalue of the square-root-regime target after deflating u1"""
    disc = 4.0 * Gamma**2 + delta**2 + delta * Gamma * (2.0 * delta + delta * Gamma - 4.0 * Gamma)
    return 1.0 + delta / 2.0 + delta * Gamma / 2.0 + math.sqrt(disc) / 2.0 - Gamma


def sqrt_regime_window(Delta: float, C: float, c: float) -> Tuple[float, float, float]:
    """(K, lower, upper) with K = min(c/10, 1/(10C), 1/100) and Gamma in [c Delta, K sqrt(Delta)]"""
    K = min(c / 10.0, 1.0 / (10.0 * C), 0.01)
    return K, c * Delta, K * math.sqrt(Delta)


def build_sqrt_regime_instance(
    Delta: float,
    C: float = 1.0,
    c: Optional[float] = None,
    g: Optional[RegimeFunction] = None,
    Gamma: Optional[float] = None,
) -> CounterexampleInstance:
    """
    Square-root-regime instance with kappa = 2

    When g is given, Gamma = g(Delta, 2) and c = nu 2^beta Delta^(alpha-1), so
    Gamma sits on the lower window edge. Otherwise c defaults to 0.1 and Gamma
    to the upper edge K sqrt(Delta).

    Raises:
        NotInRegime: Gamma outside [c Delta, K sqrt(Delta)] or a closed-form bound fails
    """
    if not 0.0 < Delta < 1.0:
        raise InvalidInput("Delta must lie in (0, 1)")
    if g is not None:
        Gamma = g(Delta, 2.0)
        c = g.nu * 2.0**g.beta * Delta ** (g.alpha - 1.0)
    c = 0.1 if c is None else c
    K, lower, upper = sqrt_regime_window(Delta, C, c)
    Gamma = upper if Gamma is None else Gamma
    if not lower * (1.0 - 1e-12) <= Gamma <= upper * (1.0 + 1e-12):
        raise NotInRegime(f"Gamma={Gamma:.3e} outside window [{lower:.3e}, {upper:.3e}]")

    delta = 10.0 * K * Delta
    M = SymMatrix.diag([2.0, 1.0, 1.0 - 2.0 * Gamma])
    u1 = np.array([math.sqrt(1.0 - delta), math.sqrt(delta / 2.0), math.sqrt(delta / 2.0)])
    _check_first_answer(M, u1, delta)
    u2 = _second_answer(M, u1)

    lam = sqrt_regime_lambda(delta, Gamma)
    deflated = M.compress(as_frame(u1).complement_projector())
    numeric = float(eig_sym(deflated).eigenvalues[0])
    if not 1.0 + delta / 2.0 < lam < 1.0 + 1.5 * delta:
        raise NotInRegime(f"lambda={lam:.12f} outside (1 + delta/2, 1 + 3 delta/2)")
    if u2[2] ** 2 <= Delta:
        raise NotInRegime(f"u2_3^2 = {u2[2] ** 2:.3e} does not exceed Delta")

    return CounterexampleInstance(
        kind="sqrt",
        M=M,
        scripted_answers=(u1, u2),
        Delta=Delta,
        Gamma=Gamma,
        delta=delta,
        kappa=cond_k(M, 2),
        metadata={"C": C, "c": c, "K": K, "lambda": lam, "lambda_numeric": numeric, "u2_3_sq": float(u2[2] ** 2)},
    )


def run_witness(instance: CounterexampleInstance) -> float:
    """Replay both answers through black_box_pca; the reduction fails when the result exceeds Delta"""
    trace = black_box_pca(instance.M, 2, ScriptedOracle(instance.scripted_answers))
    return cpca_mass(instance.M, trace.frame, instance.Gamma).delta_achieved


def regime_classify(g: RegimeFunction) -> RegimeClassification:
    """INVALID if alpha > 1/2 or beta < 1, VALID-CANDIDATE otherwise"""
    if g.beta < 1.0 or g.alpha > 1.0:
        return RegimeClassification(INVALID, "beta < 1 or alpha > 1: linear-regime witness", build_linear_regime_instance)
    if g.alpha > 0.5:
        return RegimeClassification(INVALID, "alpha > 1/2: square-root-regime witness", build_sqrt_regime_instance)
    return RegimeClassification(VALID_CANDIDATE, "alpha <= 1/2 and beta >= 1: inside Delta kappa^2 <= Gamma^2")


def find_witness(g: RegimeFunction, C: float = 1.0) -> CounterexampleInstance:
    """
    Search a desk-scale parameter grid for a witness of an INVALID regime

    Raises:
        NotInRegime: VALID-CANDIDATE regime, or no window-valid point at double precision
    """
    classification = regime_classify(g)
    if classification.label != INVALID:
        raise NotInRegime(f"{g} is a valid candidate; no witness exists")
    # the classified builder first, then the other one
    others = [b for b in (build_linear_regime_instance, build_sqrt_regime_instance) if b is not classification.witness]
    builders = [classification.witness] + others
    for builder in builders:
        for exponent in range(2, 11):
            Delta = 10.0**-exponent
            try:
                if builder is build_sqrt_regime_instance:
                    return builder(Delta, C, g=g)
                for power in range(1, 41):
                    try:
                        return builder(Delta, 2.0**power + 1.0, C, g)
                    except NotInRegime:
                        continue
            except NotInRegime:
                continue
    raise NotInRegime(f"no window-valid witness for {g} at desk scale")


@dataclass
class LowerBoundDistribution:
    """
    Product law on R^d: Rademacher coordinates, except coordinate `index`
    drawn from (1-eps) Rademacher + eps uniform{+-0.5 Cp eps^(-1/p)}

    index=None is the all-Rademacher null law D_0.
    """

    d: int
    p: int
    Cp: float
    eps: float
    index: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        self.rng = np.random.default_rng([self.seed, 0 if self.index is None else self.index + 1])

    @property
    def spike(self) -> float:
        return 0.5 * self.Cp * self.eps ** (-1.0 / self.p)

    @property
    def s(self) -> float:
        return self.eps * (0.25 * self.Cp**2 * self.eps ** (-2.0 / self.p) - 1.0)

    def coordinate_moment(self, q: int) -> float:
        """Exact E[X^q] of the planted coordinate (q even)"""
        if q % 2:
            return 0.0
        if self.index is None:
            return 1.0
        return (1.0 - self.eps) + self.eps * self.spike**q

    def covariance(self) -> np.ndarray:
        sigma = np.eye(self.d)
        if self.index is not None:
            sigma[self.index, self.index] += self.s
        return sigma

    def moment_ratio(self) -> float:
        """(E X^p)^(1/p) / (E X^2)^(1/2) of the planted coordinate"""
        return self.coordinate_moment(self.p) ** (1.0 / self.p) / math.sqrt(self.coordinate_moment(2))

    def sample(self, n: int) -> np.ndarray:
        X = self.rng.choice([-1.0, 1.0], size=(n, self.d))
        if self.index is not None:
            planted = self.rng.random(n) < self.eps
            X[planted, self.index] = self.spike * self.rng.choice([-1.0, 1.0], size=int(planted.sum()))
        return X

    def epca_error_of(self, u: np.ndarray) -> float:
        """ePCA error of unit u against this law's covariance: s (1 - u_i^2) / (1 + s)"""
        if self.index is None:
            return 0.0
        u = np.asarray(u, dtype=np.float64)
        return self.s * (1.0 - u[self.index] ** 2) / (1.0 + self.s)

    def tv_to_null(self) -> float:
        if self.index is None or math.isclose(self.spike, 1.0):
            return 0.0
        return self.eps


def lowerbound_family(d: int, p: int, Cp: float, eps: float, seed: int = 0) -> List[LowerBoundDistribution]:
    """
    D_0 followed by D_1..D_d

    Raises:
        InvalidInput: p not an even integer >= 4, Cp <= 2, eps > (Cp^2/8)^(p/2) or d > 64
    """
    if p < 4 or p % 2:
        raise InvalidInput(f"p={p} must be an even integer >= 4")
    if Cp <= 2.0:
        raise InvalidInput(f"Cp={Cp} must exceed 2")
    if not 0.0 < eps <= (Cp**2 / 8.0) ** (p / 2.0):
        raise InvalidInput(f"eps={eps} outside (0, (Cp^2/8)^(p/2)]")
    if not 1 <= d <= MAX_LOWERBOUND_DIM:
        raise InvalidInput(f"d={d} outside [1, {MAX_LOWERBOUND_DIM}]")
    return [LowerBoundDistribution(d, p, Cp, eps, None, seed)] + [
        LowerBoundDistribution(d, p, Cp, eps, i, seed) for i in range(d)
    ]
