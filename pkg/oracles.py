#!/usr/bin/env python3
"""
1-PCA Oracle Interface

This module defines the abstract base class for approximate 1-PCA oracles,
allowing the deflation driver to run against interchangeable backends
(exact eigensolver, certified power iteration, streaming Oja, scripted and
adversarial answers, the robust filter) through a unified interface.

Every oracle answers an OracleQuery (target access plus the current projector
P) with a unit vector inside span(P).

Usage:
    from oracles import OracleBudget, OracleFactory

    oracle = OracleFactory.create_oracle("power", budget=OracleBudget(delta=1e-8, gamma=0.01))
    answer = oracle.answer(query)
"""

import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from linalg_core import Projector, SymMatrix, eig_sym, eigenspace_split, identity_projector
from pca_config import DEFAULT_BETA, OJA_N_CONSTANT, POWER_MAX_ITERS, SINGULAR_TOL, SPAN_TOL, say
from pca_errors import BudgetExhausted, BudgetWarning, InvalidInput, NullResidualSpace, OracleContractViolation

OJA_SCHEDULES = ("warmup", "constant", "invsqrt", "invt")


@dataclass(frozen=True)
class OracleQuery:
    """Target access (explicit matrix or sample stream) plus the current projector"""

    projector: Projector
    matrix: Optional[SymMatrix] = None
    stream: Optional[Any] = None
    step: int = 1

    def residual(self) -> SymMatrix:
        """PMP; requires explicit matrix access"""
        if self.matrix is None:
            raise InvalidInput("oracle needs explicit matrix access")
        return self.matrix.compress(self.projector)


@dataclass
class OracleAnswer:
    vector: np.ndarray
    diagnostics: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class OracleBudget:
    """ePCA contract (epsilon) or cPCA contract (delta, gamma) for one oracle call"""

    epsilon: Optional[float] = None
    delta: Optional[float] = None
    gamma: Optional[float] = None
    max_iters: int = POWER_MAX_ITERS
    rng_seed: int = 0
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        for name in ("epsilon", "delta", "gamma"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise InvalidInput(f"{name}={value} outside [0, 1]")
        if (self.delta is None) != (self.gamma is None):
            raise InvalidInput("delta and gamma must be given together")
        if self.max_iters < 0:
            raise InvalidInput("max_iters must be nonnegative")

    @property
    def is_cpca(self) -> bool:
        return self.delta is not None

    def satisfies_oja_precondition(self) -> bool:
        """max(delta, gamma) <= 1/10 and delta <= gamma^2 / 256"""
        if not self.is_cpca:
            return False
        return max(self.delta, self.gamma) <= 0.1 and self.delta <= self.gamma**2 / 256.0


def _null_answer(projector: Projector, step: int, strict: bool, name: str) -> OracleAnswer:
    if strict:
        raise NullResidualSpace(f"step {step}: PMP vanishes on span(P)")
    say(f"⚠️  {name}: PMP vanishes at step {step}, returning a basis vector of span(P)")
    return OracleAnswer(projector.span_frame().column(0).copy(), {"null_residual": True, "iterations": 0})


def _check_answer(projector: Projector, u: np.ndarray, step: int) -> None:
    dist = projector.span_distance(u)
    if dist > SPAN_TOL:
        raise OracleContractViolation(f"answer lies {dist:.3e} outside span(P)", step)


class OneOracle(ABC):
    """Abstract base class for approximate 1-PCA oracles"""

    budget: Optional[OracleBudget] = None

    @abstractmethod
    def answer(self, query: OracleQuery) -> OracleAnswer:
        """
        Return an approximate top eigenvector of PMP inside span(P)

        Args:
            query: Target access plus the current projector

        Returns:
            OracleAnswer with a unit vector and diagnostics
        """
        pass

    @abstractmethod
    def get_oracle_name(self) -> str:
        """Get the name of this oracle"""
        pass

    def reset(self) -> None:
        """Forget per-run state (optional)"""
        pass

    def __call__(self, query: OracleQuery) -> OracleAnswer:
        return self.answer(query)


class ExactOracle(OneOracle):
    """Top eigenvector of PMP from eig_sym"""

    def __init__(self, strict: bool = False):
        self.strict = strict

    def answer(self, query: OracleQuery) -> OracleAnswer:
        residual = query.residual()
        spectrum = eig_sym(residual)
        top = float(spectrum.eigenvalues[0])
        if top <= SINGULAR_TOL * max(1.0, query.matrix.frob_norm()):
            return _null_answer(query.projector, query.step, self.strict, self.get_oracle_name())
        u = spectrum.eigenvectors.column(0).copy()
        return OracleAnswer(u, {"iterations": 0, "top_eigenvalue": top})

    def get_oracle_name(self) -> str:
        return "exact"


class PowerOracle(OneOracle):
    """
    Certified (delta, gamma)-1-cPCA by power iteration

    The iterate's mass on V^{<(1-gamma) lambda_1(PMP)} is checked against
    eig_sym of PMP after every step; that certificate only exists at desk scale.
    """

    def __init__(self, budget: OracleBudget, strict: bool = False):
        if not budget.is_cpca:
            raise InvalidInput("power oracle needs a (delta, gamma) budget")
        self.budget = budget
        self.strict = strict

    def answer(self, query: OracleQuery) -> OracleAnswer:
        P = query.projector
        residual = query.residual()
        spectrum = eig_sym(residual)
        top = float(spectrum.eigenvalues[0])
        if top <= SINGULAR_TOL * max(1.0, query.matrix.frob_norm()):
            return _null_answer(P, query.step, self.strict, self.get_oracle_name())

        _, small = eigenspace_split(residual, (1.0 - self.budget.gamma) * top, spectrum=spectrum)
        small_cols = small.columns
        rng = np.random.default_rng([self.budget.rng_seed, query.step])

        w = P.apply(rng.standard_normal(P.dim))
        w /= np.linalg.norm(w)
        mass = float(np.sum((small_cols.T @ w) ** 2))
        iterations = 0
        while mass > self.budget.delta:
            if iterations >= self.budget.max_iters:
                raise BudgetExhausted(
                    f"power iteration stopped at mass {mass:.3e} > delta={self.budget.delta:.3e}",
                    achieved=mass,
                )
            w = P.apply(residual.entries @ w)
            norm = np.linalg.norm(w)
            if norm <= SINGULAR_TOL:
                # start fell into the kernel of PMP
                w = P.apply(rng.standard_normal(P.dim))
                norm = np.linalg.norm(w)
            w /= norm
            mass = float(np.sum((small_cols.T @ w) ** 2))
            iterations += 1

        return OracleAnswer(w, {"iterations": iterations, "achieved_delta": mass, "gamma": self.budget.gamma})

    def get_oracle_name(self) -> str:
        return "power"


class OjaOracle(OneOracle):
    """
    Streaming (delta, gamma)-1-cPCA by Oja's rule on projected samples

    Keeps one d-vector of state. The step schedule is implementation-defined:
    "warmup" runs half the samples at a constant rate eta0, then decays as
    c / (lambda_hat * t) continuing from eta0.
    """

    def __init__(
        self,
        budget: OracleBudget,
        clip_radius: Optional[float] = None,
        n_samples: Optional[int] = None,
        schedule: str = "warmup",
        eta0: Optional[float] = None,
        c: float = 4.0,
        batch_size: int = 1,
        warn_short: bool = True,
    ):
        if not budget.is_cpca:
            raise InvalidInput("Oja oracle needs a (delta, gamma) budget")
        if schedule not in OJA_SCHEDULES:
            raise ValueError(f"Unknown schedule type: {schedule}")
        if batch_size < 1:
            raise InvalidInput("batch_size must be positive")
        self.budget = budget
        self.clip_radius = clip_radius
        self.n_samples = n_samples
        self.schedule = schedule
        self.eta0 = eta0
        self.c = c
        self.batch_size = batch_size
        self.warned = not warn_short

    def _rate(self, t: int, n: int, eta0: float, lam_hat: float) -> float:
        if self.schedule == "constant":
            return eta0
        if self.schedule == "invsqrt":
            return eta0 / math.sqrt(t)
        if self.schedule == "invt":
            return eta0 / t
        warm = n // 2
        if t <= warm:
            return eta0
        shift = self.c / (max(lam_hat, SINGULAR_TOL) * eta0)
        return self.c / (max(lam_hat, SINGULAR_TOL) * (t - warm + shift))

    def answer(self, query: OracleQuery) -> OracleAnswer:
        stream = query.stream
        if stream is None:
            raise InvalidInput("Oja oracle needs stream access")
        P = query.projector
        n = self.n_samples or stream.segment_size
        required = oja_sample_size(P.dim, self.budget.delta, self.budget.gamma, self.budget.beta)
        if n < required and not self.warned:
            warnings.warn(
                f"Oja handed {n} samples, calibrated requirement is {required}; returning best iterate",
                BudgetWarning,
                stacklevel=2,
            )
            self.warned = True

        rng = np.random.default_rng([self.budget.rng_seed, query.step])
        w = P.apply(rng.standard_normal(P.dim))
        w /= np.linalg.norm(w)

        t = 0
        lam_hat = 0.0
        eta0 = self.eta0
        for batch in stream.take(n, self.batch_size):
            if self.clip_radius is not None:
                norms = np.linalg.norm(batch, axis=1)
                scale = np.minimum(1.0, math.sqrt(self.clip_radius) / np.maximum(norms, SINGULAR_TOL))
                batch = batch * scale[:, None]
            Y = batch @ P.matrix
            proj = Y @ w
            if eta0 is None:
                # first batch fixes the scale: eta0 ~ 1 / (E||Px||^2 sqrt(n/2))
                scale_sq = float(np.mean(np.sum(Y * Y, axis=1)))
                eta0 = 1.0 / (max(scale_sq, SINGULAR_TOL) * math.sqrt(max(n // 2, 1)))
            t += Y.shape[0]
            lam_hat += (float(np.mean(proj**2)) - lam_hat) * Y.shape[0] / t
            w = w + self._rate(t, n, eta0, lam_hat) * (Y.T @ proj) / Y.shape[0]
            w = P.apply(w)
            norm = np.linalg.norm(w)
            if norm <= SINGULAR_TOL:
                w = P.apply(rng.standard_normal(P.dim))
                norm = np.linalg.norm(w)
            w /= norm

        return OracleAnswer(
            w,
            {
                "samples": t,
                "required_samples": required,
                "lambda_hat": lam_hat,
                "eta0": eta0,
                "schedule": self.schedule,
                "gamma": self.budget.gamma,
            },
        )

    def get_oracle_name(self) -> str:
        return "oja"


class AdversarialEpcaOracle(OneOracle):
    """
    Worst-case epsilon-1-ePCA: mixes the top eigenvector of PMP with the
    smallest-eigenvalue direction of span(P)

    With saturate=True the mixing weight is chosen so the per-call ePCA error
    is exactly epsilon whenever the spread of PMP on span(P) allows it.
    """

    def __init__(self, epsilon: float, saturate: bool = True):
        if not 0.0 <= epsilon <= 1.0:
            raise InvalidInput(f"epsilon={epsilon} outside [0, 1]")
        self.budget = OracleBudget(epsilon=epsilon)
        self.saturate = saturate

    def answer(self, query: OracleQuery) -> OracleAnswer:
        P = query.projector
        M = query.matrix
        if M is None:
            raise InvalidInput("adversarial oracle needs explicit matrix access")
        basis = P.span_frame().columns
        inner = eig_sym(basis.T @ M.entries @ basis)
        top_vec = basis @ inner.eigenvectors.column(0)
        if P.rank == 1:
            return OracleAnswer(top_vec, {"leak": 0.0})

        lam_top, lam_low = float(inner.eigenvalues[0]), float(inner.eigenvalues[-1])
        worst = basis @ inner.eigenvectors.column(P.rank - 1)
        leak = self.budget.epsilon
        if self.saturate and lam_top > SINGULAR_TOL:
            spread = 1.0 - lam_low / lam_top
            leak = min(1.0, leak / spread) if spread > SINGULAR_TOL else 0.0
        u = math.sqrt(1.0 - leak) * top_vec + math.sqrt(leak) * worst
        u /= np.linalg.norm(u)
        return OracleAnswer(u, {"leak": leak, "top_eigenvalue": lam_top, "low_eigenvalue": lam_low})

    def get_oracle_name(self) -> str:
        return "adversarial-epca"


class ScriptedOracle(OneOracle):
    """Replays a fixed list of answers in order"""

    def __init__(self, answers: Sequence[Sequence[float]]):
        self.answers: List[np.ndarray] = [np.asarray(a, dtype=np.float64).reshape(-1) for a in answers]
        self.calls = 0

    def answer(self, query: OracleQuery) -> OracleAnswer:
        if self.calls >= len(self.answers):
            raise OracleContractViolation(f"no scripted answer left after {self.calls} calls", query.step)
        u = self.answers[self.calls].copy()
        self.calls += 1
        _check_answer(query.projector, u, query.step)
        return OracleAnswer(u, {"call": self.calls})

    def reset(self) -> None:
        self.calls = 0

    def get_oracle_name(self) -> str:
        return "scripted"


class OracleFactory:
    """Factory class for creating 1-PCA oracles"""

    @staticmethod
    def create_oracle(oracle_type: str, **options) -> OneOracle:
        """
        Create a 1-PCA oracle based on type

        Args:
            oracle_type: 'exact', 'power', 'oja', 'adversarial-epca', 'scripted' or 'filter'
            **options: Constructor arguments of the chosen oracle

        Returns:
            OneOracle instance
        """
        oracle_type = oracle_type.lower().strip()

        if oracle_type == "exact":
            return ExactOracle(**options)
        elif oracle_type == "power":
            return PowerOracle(**options)
        elif oracle_type == "oja":
            return OjaOracle(**options)
        elif oracle_type == "adversarial-epca":
            return AdversarialEpcaOracle(**options)
        elif oracle_type == "scripted":
            return ScriptedOracle(**options)
        elif oracle_type == "filter":
            # Import here to avoid circular imports
            from robust import FilterOracle

            return FilterOracle(**options)
        else:
            raise ValueError(f"Unknown oracle type: {oracle_type}")


def oja_sample_size(
    d: int, delta: float, gamma: float, beta: float = DEFAULT_BETA, constant: float = OJA_N_CONSTANT
) -> int:
    """Calibrated n = ceil(c * d / (delta gamma^2) * log(d / beta))"""
    if delta <= 0.0 or gamma <= 0.0:
        raise InvalidInput("delta and gamma must be positive")
    return int(math.ceil(constant * d / (delta * gamma**2) * math.log(max(d / beta, math.e))))


def oracle_exact(query: OracleQuery) -> OracleAnswer:
    return ExactOracle().answer(query)


def oracle_power(query: OracleQuery, budget: OracleBudget) -> OracleAnswer:
    return PowerOracle(budget).answer(query)


def oracle_oja(
    stream: Any, budget: OracleBudget, clip_radius: Optional[float], projector: Optional[Projector] = None
) -> OracleAnswer:
    """Single Oja call on the next segment of a stream"""
    projector = projector or identity_projector(stream.dim)
    return OjaOracle(budget, clip_radius).answer(OracleQuery(projector, stream=stream))


def oracle_adversarial_epca(epsilon: float) -> OneOracle:
    return AdversarialEpcaOracle(epsilon)


def oracle_scripted(answers: Sequence[Sequence[float]]) -> OneOracle:
    return ScriptedOracle(answers)
