#!/usr/bin/env python3
"""
Black-Box k-to-1 PCA Deflation

Runs a 1-PCA oracle k times, removing each answer from the projector:

    P_0 = I,  u_i = O(M, P_{i-1}),  P_i = P_{i-1} - u_i u_i^T

and returns U = [u_1 ... u_k]. Also provides end-to-end checks that the
output inherits the oracle's ePCA guarantee with no parameter loss, that the
cPCA guarantee survives at the composition constants when Delta kappa_k^2 <= Gamma^2,
and a post-hoc audit of the dyadic merge tree behind the cPCA analysis.

Usage:
    from deflation import black_box_pca
    from oracles import ExactOracle

    trace = black_box_pca(M, 3, ExactOracle())
    print(trace.frame.columns)
"""

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from linalg_core import (
    Frame,
    Projector,
    SymMatrix,
    as_sym,
    cond_k,
    deflate_projector,
    eigenvalues,
    identity_projector,
)
from oracles import OneOracle, OracleBudget, OracleQuery, PowerOracle
from pca_config import NORM_TOL, say
from pca_errors import (
    DegenerateTarget,
    InvalidInput,
    OracleContractViolation,
    PrecondUnmet,
    RegimeRejected,
    SingularTopSpace,
)
from pca_metrics import EpcaReport, cpca_mass, dyadic_schedule, epca_error, per_call_errors

PER_CALL_TOL = 1e-10
THEOREM_TOL = 1e-8


@dataclass(frozen=True)
class DeflationStep:
    """One oracle call of the deflation loop"""

    step: int
    vector: Tuple[float, ...]
    projector_rank: int
    certificate: Dict[str, Optional[float]] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    residual_top: Optional[float] = None
    samples_consumed: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "step": self.step,
            "vector": list(self.vector),
            "projector_rank": self.projector_rank,
            "certificate": self.certificate,
            "diagnostics": {key: value for key, value in self.diagnostics.items() if _jsonable(value)},
            "residual_top": self.residual_top,
            "samples_consumed": self.samples_consumed,
        }


def _jsonable(value: Any) -> bool:
    return isinstance(value, (int, float, str, bool)) or value is None


@dataclass(frozen=True)
class DeflationTrace:
    """Immutable record of one black_box_pca run"""

    dim: int
    k: int
    oracle_name: str
    steps: Tuple[DeflationStep, ...]

    @property
    def frame(self) -> Frame:
        return Frame(np.column_stack([np.array(s.vector) for s in self.steps]))

    @property
    def null_residual_steps(self) -> List[int]:
        return [s.step for s in self.steps if s.diagnostics.get("null_residual")]

    def max_per_call(self, key: str) -> Optional[float]:
        """Largest per-call certificate value for 'epsilon', 'delta' or 'gamma'"""
        values = [s.certificate.get(key) for s in self.steps if s.certificate.get(key) is not None]
        return max(values) if values else None

    def energy(self, M: Union[SymMatrix, np.ndarray]) -> float:
        return float(np.trace(as_sym(M).quad(self.frame)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "k": self.k,
            "oracle": self.oracle_name,
            "steps": [s.to_dict() for s in self.steps],
            "null_residual_steps": self.null_residual_steps,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def black_box_pca(
    M_access: Any,
    k: int,
    oracle: OneOracle,
    certify: bool = True,
    initial_projector: Optional[Projector] = None,
) -> DeflationTrace:
    """
    Algorithm driver: k oracle calls, each followed by a rank-one deflation

    Args:
        M_access: Explicit target (SymMatrix or array) or a sample stream
        k: Number of components
        oracle: 1-PCA oracle
        certify: Record per-call ePCA error and cPCA mass against PMP (explicit targets only)
        initial_projector: Start from this P instead of the identity

    Returns:
        DeflationTrace with the k answers
    """
    matrix, stream = None, None
    if hasattr(M_access, "take"):
        stream = M_access
        d = stream.dim
    else:
        matrix = as_sym(M_access)
        d = matrix.dim

    P = initial_projector or identity_projector(d)
    if P.dim != d:
        raise InvalidInput(f"initial projector has dimension {P.dim}, expected {d}")
    if not 1 <= k <= P.rank:
        raise InvalidInput(f"k={k} outside [1, {P.rank}]")

    oracle.reset()
    budget: Optional[OracleBudget] = oracle.budget
    gamma = budget.gamma if budget is not None and budget.is_cpca else None

    say(f"🚀 Deflating with {oracle.get_oracle_name()} oracle: d={d}, k={k}")
    steps: List[DeflationStep] = []
    for i in range(1, k + 1):
        query = OracleQuery(projector=P, matrix=matrix, stream=stream, step=i)
        answer = oracle.answer(query)
        u = np.asarray(answer.vector, dtype=np.float64).reshape(-1)
        if u.shape[0] != d:
            raise OracleContractViolation(f"answer has length {u.shape[0]}, expected {d}", i)
        norm = np.linalg.norm(u)
        if abs(norm - 1.0) > NORM_TOL:
            raise OracleContractViolation(f"answer norm deviates from 1 by {abs(norm - 1.0):.3e}", i)
        u = u / norm

        certificate: Dict[str, Optional[float]] = {}
        residual_top = None
        if matrix is not None and certify:
            certificate = per_call_errors(matrix.compress(P), u, gamma=gamma)
            residual_top = certificate.pop("top")
            if gamma is not None:
                certificate["gamma"] = gamma

        P_next = deflate_projector(P, u, step=i)
        snapped = P.apply(u)
        snapped /= np.linalg.norm(snapped)
        P = P_next

        steps.append(
            DeflationStep(
                step=i,
                vector=tuple(float(x) for x in snapped),
                projector_rank=P.rank,
                certificate=certificate,
                diagnostics=dict(answer.diagnostics),
                residual_top=residual_top,
                samples_consumed=getattr(stream, "consumed", None),
            )
        )
        if answer.diagnostics.get("null_residual"):
            say(f"⚠️  Step {i}: null residual space, answer is arbitrary in span(P)")

    return DeflationTrace(dim=d, k=k, oracle_name=oracle.get_oracle_name(), steps=tuple(steps))


def epca_theorem_check(
    M: Union[SymMatrix, np.ndarray], k: int, oracle: OneOracle, eps: float
) -> Tuple[bool, DeflationTrace, EpcaReport]:
    """verify_epca_theorem with the trace and final report"""
    M = as_sym(M)
    trace = black_box_pca(M, k, oracle)
    worst = trace.max_per_call("epsilon") or 0.0
    if worst > eps + PER_CALL_TOL:
        raise PrecondUnmet(f"oracle exceeded eps={eps} on a call (measured {worst:.3e})")
    report = epca_error(M, trace.frame)
    return report.epsilon_achieved <= eps + THEOREM_TOL, trace, report


def verify_epca_theorem(M: Union[SymMatrix, np.ndarray], k: int, oracle: OneOracle, eps: float) -> bool:
    """
    Check that deflation with a per-call eps-1-ePCA oracle is an eps-k-ePCA

    Raises:
        PrecondUnmet: Some call measured above eps, so the check is vacuous
    """
    holds, _, _ = epca_theorem_check(M, k, oracle, eps)
    return holds


def final_composition_params(k: int, Delta: float, Gamma: float) -> Dict[str, float]:
    """Per-call (delta, gamma) from the explicit constant chain of the k-cPCA composition"""
    if k < 1:
        raise InvalidInput("k must be positive")
    depth = math.ceil(math.log2(k)) if k > 1 else 0
    Delta_bar = Delta / (640.0 * k * k)
    Delta_prime = Delta_bar / (18.0 * k * k)
    Gamma_bar = Gamma / (10.0 * k)
    Gamma_prime = Gamma_bar / (2.0 * k)
    return {
        "Delta_bar": Delta_bar,
        "Delta_prime": Delta_prime,
        "delta": Delta_prime / (132.0 * k * k) ** depth,
        "Gamma_bar": Gamma_bar,
        "Gamma_prime": Gamma_prime,
        "gamma": Gamma_prime / 2.0**depth,
    }


def gap_buckets(M: Union[SymMatrix, np.ndarray], k: int, Gamma_bar: float) -> List[int]:
    """
    Bucket boundaries 0 = K_0 < K_1 < ... < K_r = k

    An index i < k is a boundary iff lambda_{i+1} < (1 - Gamma_bar) lambda_i;
    ties at the threshold count as no gap.
    """
    lam = eigenvalues(M)
    if not 1 <= k <= lam.shape[0]:
        raise InvalidInput(f"k={k} outside [1, {lam.shape[0]}]")
    cuts = [i for i in range(1, min(k - 1, lam.shape[0] - 1) + 1) if lam[i] < (1.0 - Gamma_bar) * lam[i - 1]]
    return [0] + cuts + [k]


def _deflated(M: SymMatrix, U: np.ndarray, start: int) -> SymMatrix:
    if start == 0:
        return M
    Q = np.eye(M.dim) - U[:, :start] @ U[:, :start].T
    return SymMatrix(Q @ M.entries @ Q)


def _dyadic_nodes(lo: int, hi: int, level: int = 0) -> List[Tuple[int, int, int]]:
    size = hi - lo
    if size < 2:
        return []
    half = 2 ** (math.ceil(math.log2(size)) - 1)
    return [(lo, hi, level)] + _dyadic_nodes(lo, lo + half, level + 1) + _dyadic_nodes(lo + half, hi, level + 1)


def _nogap_prediction(m: int, delta: float, gamma: float) -> Tuple[float, float]:
    depth = math.ceil(math.log2(m)) if m > 1 else 0
    return (132.0 * m * m) ** depth * delta, 2.0**depth * gamma


def _measure(M: SymMatrix, U: np.ndarray, lo: int, hi: int, gamma: float) -> Optional[float]:
    try:
        return cpca_mass(_deflated(M, U, lo), Frame(U[:, lo:hi]), min(gamma, 1.0)).delta_achieved
    except DegenerateTarget:
        return None


def cpca_theorem_check(
    M: Union[SymMatrix, np.ndarray],
    k: int,
    Delta: float,
    Gamma: float,
    oracle_factory: Optional[Callable[[OracleBudget], OneOracle]] = None,
    rng_seed: int = 0,
) -> Tuple[bool, DeflationTrace, float, Dict[str, float]]:
    """verify_cpca_theorem with the trace, measured mass and per-call parameters"""
    M = as_sym(M)
    if not (0.0 < Gamma < 1.0 and 0.0 <= Delta <= 1.0):
        raise InvalidInput("need Gamma in (0, 1) and Delta in [0, 1]")
    try:
        kappa = cond_k(M, k)
    except SingularTopSpace as e:
        raise RegimeRejected(f"kappa_{k} undefined: {e}") from e
    if Delta * kappa**2 > Gamma**2:
        raise RegimeRejected(
            f"Delta kappa_k^2 = {Delta * kappa ** 2:.3e} exceeds Gamma^2 = {Gamma ** 2:.3e}; "
            "outside this regime no per-call accuracy suffices"
        )
    params = final_composition_params(k, Delta, Gamma)
    budget = OracleBudget(delta=params["delta"], gamma=params["gamma"], rng_seed=rng_seed)
    oracle = (oracle_factory or PowerOracle)(budget)
    trace = black_box_pca(M, k, oracle)
    measured = cpca_mass(M, trace.frame, Gamma).delta_achieved
    return measured <= Delta + THEOREM_TOL, trace, measured, params


def verify_cpca_theorem(
    M: Union[SymMatrix, np.ndarray],
    k: int,
    Delta: float,
    Gamma: float,
    oracle_factory: Optional[Callable[[OracleBudget], OneOracle]] = None,
) -> bool:
    """
    Check that deflation with (delta, gamma)-1-cPCA oracles at the composition
    constants yields a (Delta, Gamma)-k-cPCA

    Args:
        M: PSD target with Delta kappa_k(M)^2 <= Gamma^2
        k: Number of components
        Delta, Gamma: Target cPCA parameters
        oracle_factory: Builds an oracle from an OracleBudget (certified power iteration by default)

    Returns:
        True iff cpca_mass(M, U, Gamma) <= Delta + 1e-8

    Raises:
        RegimeRejected: Delta kappa_k^2 > Gamma^2
    """
    holds, _, _, _ = cpca_theorem_check(M, k, Delta, Gamma, oracle_factory)
    return holds


def dyadic_merge_audit(
    trace: DeflationTrace,
    M: Union[SymMatrix, np.ndarray],
    schedule: Optional[List[int]] = None,
    delta: Optional[float] = None,
    gamma: Optional[float] = None,
    Gamma_bar: Optional[float] = None,
) -> Dict[str, Any]:
    """
    Measured cPCA mass of every merge in the dyadic composition tree

    Within a bucket (no spectral gap) each node of size m is compared with
    ((132 m^2)^ceil(log2 m) delta, 2^ceil(log2 m) gamma); across buckets each
    level follows (4^(L-l) delta_b, 2^(L-l) gamma_b) where (delta_b, gamma_b)
    is the worst bucket guarantee. Each bucket also reports kappa_{k_j} <= 2
    on its deflated target.

    Args:
        trace: Completed deflation trace
        M: Target the trace was run on
        schedule: Bucket boundaries [0, K_1, ..., k]; derived from Gamma_bar if omitted
        delta, gamma: Per-call oracle parameters (default: the per-call maxima
            recorded in the trace; gamma comes from the oracle budget)
        Gamma_bar: Gap rule for deriving the boundaries

    Returns:
        Report dict with 'buckets', 'nodes' and 'all_hold'
    """
    M = as_sym(M)
    U = trace.frame.columns
    k = trace.k
    if schedule is None:
        schedule = gap_buckets(M, k, Gamma_bar) if Gamma_bar is not None else [0, k]
    if schedule[0] != 0 or schedule[-1] != k or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise InvalidInput(f"bucket boundaries {schedule} must increase from 0 to {k}")
    delta = delta if delta is not None else (trace.max_per_call("delta") or 0.0)
    gamma = gamma if gamma is not None else (trace.max_per_call("gamma") or 0.0)

    buckets, nodes = [], []
    bucket_delta, bucket_gamma = 0.0, 0.0
    for lo, hi in zip(schedule, schedule[1:]):
        try:
            kappa = cond_k(_deflated(M, U, lo), hi - lo)
        except SingularTopSpace:
            kappa = math.inf
        buckets.append({"start": lo, "end": hi, "kappa": kappa, "well_conditioned": kappa <= 2.0})
        root_delta, root_gamma = _nogap_prediction(hi - lo, delta, gamma)
        bucket_delta, bucket_gamma = max(bucket_delta, root_delta), max(bucket_gamma, root_gamma)

        for a, b, level in _dyadic_nodes(lo, hi):
            predicted, node_gamma = _nogap_prediction(b - a, delta, gamma)
            measured = _measure(M, U, a, b, node_gamma)
            nodes.append(
                {
                    "kind": "nogap",
                    "start": a,
                    "end": b,
                    "level": level,
                    "gamma": node_gamma,
                    "measured": measured,
                    "predicted": predicted,
                    "precondition": predicted <= node_gamma**2 / 288.0,
                    "holds": measured is None or measured <= predicted + THEOREM_TOL,
                }
            )

    r = len(schedule) - 1
    levels = {level: (d_l, g_l) for level, d_l, g_l in dyadic_schedule(r, bucket_delta, bucket_gamma)}
    for a, b, level in _dyadic_nodes(0, r):
        predicted, node_gamma = levels[level]
        lo, hi = schedule[a], schedule[b]
        measured = _measure(M, U, lo, hi, node_gamma)
        nodes.append(
            {
                "kind": "gap",
                "start": lo,
                "end": hi,
                "level": level,
                "gamma": node_gamma,
                "measured": measured,
                "predicted": predicted,
                "precondition": True,
                "holds": measured is None or measured <= predicted + THEOREM_TOL,
            }
        )

    return {
        "boundaries": list(schedule),
        "buckets": buckets,
        "nodes": nodes,
        "merges": len(nodes),
        "all_hold": all(node["holds"] for node in nodes),
    }


def verify_epca_composition(
    M: Union[SymMatrix, np.ndarray], k1: int, k2: int, oracle1: OneOracle, oracle2: OneOracle, eps: float
) -> bool:
    """
    Concatenating an eps-k1-ePCA of M with an eps-k2-ePCA of the deflated
    target gives an eps-(k1+k2)-ePCA of M

    Raises:
        PrecondUnmet: A block is not an eps-ePCA of its own target, or one of
            its oracle calls exceeded eps
    """
    M = as_sym(M)
    first = black_box_pca(M, k1, oracle1)
    U1 = first.frame
    _check_block("first", M, U1, eps)
    complement = U1.complement_projector()
    deflated = M.compress(complement)
    second = black_box_pca(deflated, k2, oracle2, initial_projector=complement)
    _check_block("second", deflated, second.frame, eps)
    worst = max(first.max_per_call("epsilon") or 0.0, second.max_per_call("epsilon") or 0.0)
    if worst > eps + PER_CALL_TOL:
        raise PrecondUnmet(f"a block oracle exceeded eps={eps} (measured {worst:.3e})")
    combined = U1.hstack(second.frame)
    return epca_error(M, combined).epsilon_achieved <= eps + THEOREM_TOL


def _check_block(name: str, target: SymMatrix, U: Frame, eps: float) -> None:
    achieved = epca_error(target, U).epsilon_achieved
    if achieved > eps + THEOREM_TOL:
        raise PrecondUnmet(f"{name} block is not an eps={eps} ePCA of its target (measured {achieved:.3e})")


def projector_telescoping_error(trace: DeflationTrace) -> float:
    """max |P_k - (I - U U^T)| with P_k rebuilt step by step"""
    P = identity_projector(trace.dim)
    for s in trace.steps:
        P = deflate_projector(P, np.array(s.vector), step=s.step)
    U = trace.frame.columns
    return float(np.max(np.abs(P.matrix - (np.eye(trace.dim) - U @ U.T))))
