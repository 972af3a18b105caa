#!/usr/bin/env python3
"""
Experiment Registry

Every experiment is a function (params, seed) -> List[ResultRow]. One call
handles one seed and owns all of its randomness, so seeds can run in separate
processes and be merged back in seed order.

A row passes when `measured <= bound + tol` (or |measured - bound| <= tol for
rows that check a bound is attained). Counterexample rows invert this: the
reduction is expected to fail there, and such rows are reported as
EXPECTED-FAIL-OF-REDUCTION, which counts as a harness pass.

Usage:
    from experiments import ExperimentConfig, ExperimentFactory, run_seed

    config = ExperimentConfig("epca-lossless", seeds=[1, 2], params={"d": [16]})
    rows = run_seed(config.experiment, config.params, seed=1)
"""

import dataclasses
import inspect
import json
import math
import os
import re
import time

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from adversarial import build_linear_regime_instance, build_sqrt_regime_instance, run_witness
from deflation import (
    THEOREM_TOL,
    black_box_pca,
    cpca_theorem_check,
    dyadic_merge_audit,
    epca_theorem_check,
    projector_telescoping_error,
)
from linalg_core import (
    Frame,
    SymMatrix,
    best_proj_slack,
    cond_k,
    eig_sym,
    eigenvalues,
    interlacing_slack,
    loewner_trace_slack,
    op_norm,
    random_frame,
    random_orthogonal,
    random_projector,
    random_psd,
    trace_cs_slack,
    weyl_slack,
)
from online import SampleStream, StreamConfig, corollary_rho, kappa_transfer_check, online_kcpca, perturbation_transfer
from oracles import AdversarialEpcaOracle, ExactOracle, ScriptedOracle
from pca_config import CONFIG_SCHEMA, DATASET_DIR, DEFAULT_JOBS, DEFAULT_SEED, IDENTITY_TOL, OUTPUT_DIR, ROBUST_RATE_CAP
from pca_errors import (
    BudgetExhausted,
    BudgetWarning,
    DegenerateResidual,
    InvalidInput,
    NotInRegime,
    PrecondUnmet,
    RegimeRejected,
)
from pca_metrics import compose_bound, cpca_mass, epca_error, wedin_residual
from robust import (
    ClipConfig,
    clip_radius,
    clip_rows,
    corollary_tail_bound,
    corrupt,
    heavy_tailed_gamma,
    paired_deflation_audit,
    robust_kpca,
    sampler_hypercontractive,
    sampler_subgaussian,
    save_dataset,
    subgaussian_stability_gamma,
)
from spectra import spectrum_gen

PASS = "PASS"
FAIL = "FAIL"
EXPECTED_FAIL = "EXPECTED-FAIL-OF-REDUCTION"

CSV_COLUMNS = ["experiment", "seed", "d", "k", "param_json", "measured", "bound", "pass", "ms"]


@dataclass(frozen=True)
class ResultRow:
    """One measured-versus-predicted comparison"""

    experiment: str
    seed: int
    d: int
    k: int
    params: Dict[str, Any]
    measured: float
    bound: float
    status: str
    ms: float = 0.0

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def to_csv_row(self, timing: bool = True) -> Dict[str, str]:
        return {
            "experiment": self.experiment,
            "seed": str(self.seed),
            "d": str(self.d),
            "k": str(self.k),
            "param_json": json.dumps(self.params, sort_keys=True),
            "measured": repr(float(self.measured)),
            "bound": repr(float(self.bound)),
            "pass": self.status,
            "ms": f"{self.ms:.3f}" if timing else "0",
        }


def judge(measured: float, bound: float, tol: float, check: str = "upper", expect_fail: bool = False) -> str:
    """Status of a row; NaN measurements always fail"""
    if check == "equal":
        ok = abs(measured - bound) <= tol
    else:
        ok = measured <= bound + tol
    if expect_fail:
        return EXPECTED_FAIL if not ok and not math.isnan(measured) else FAIL
    return PASS if ok else FAIL


class RowCollector:
    """Rows of one (experiment, seed) call; each row is timed since the previous one"""

    def __init__(self, experiment: str, seed: int):
        self.experiment = experiment
        self.seed = seed
        self.rows: List[ResultRow] = []
        self._clock = time.perf_counter()

    def add(
        self,
        d: int,
        k: int,
        params: Dict[str, Any],
        measured: float,
        bound: float,
        tol: float = 0.0,
        check: str = "upper",
        expect_fail: bool = False,
    ) -> ResultRow:
        now = time.perf_counter()
        measured, bound = float(measured), float(bound)
        row = ResultRow(
            experiment=self.experiment,
            seed=self.seed,
            d=int(d),
            k=int(k),
            params={**params, "tol": tol, "check": check},
            measured=measured,
            bound=bound,
            status=judge(measured, bound, tol, check, expect_fail),
            ms=(now - self._clock) * 1000.0,
        )
        self._clock = now
        self.rows.append(row)
        return row


def child_seeds(seed: int, count: int) -> List[int]:
    """Independent integer seeds derived from one experiment seed"""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


# Experiments


def run_epca_lossless(params: Dict[str, Any], seed: int) -> List[ResultRow]:
    """
    Lossless ePCA composition

    Deflation driven by a saturating adversarial eps-1-ePCA oracle on random
    Wishart targets. Every call leaks exactly eps of the available energy
    toward the least useful direction; the k-frame must still be an
    eps-k-ePCA (epsilon_achieved <= eps + 1e-8).
    """
    rows = RowCollector("epca-lossless", seed)
    for d in params["d"]:
        for k in params["k"]:
            if k > d:
                continue
            M = random_psd(d, np.random.default_rng([seed, d, k]))
            for eps in params["eps"]:
                try:
                    _, _, report = epca_theorem_check(M, k, AdversarialEpcaOracle(eps), eps)
                    measured = report.epsilon_achieved
                except PrecondUnmet:
                    measured = math.nan
                rows.add(d, k, {"eps": eps}, measured, eps, tol=THEOREM_TOL)
    return rows.rows


def run_epca_tightness(params: Dict[str, Any], seed: int) -> List[ResultRow]:
    """
    The ePCA bound is attained

    M = Q diag(1_k, 0_k) Q^T with d = 2k and scripted answers
    Q (sqrt(1 - eps) e_i + sqrt(eps) e_{k+i}). Each answer is an eps-1-ePCA
    and the composed frame has epsilon_achieved = eps to 1e-9.
    """
    rows = RowCollector("epca-tightness", seed)
    for k in params["k"]:
        d = 2 * k
        Q = random_orthogonal(d, np.random.default_rng([seed, k]))
        M = SymMatrix((Q * np.r_[np.ones(k), np.zeros(k)][None, :]) @ Q.T)
        for eps in params["eps"]:
            answers = []
            for i in range(k):
                v = np.zeros(d)
                v[i], v[k + i] = math.sqrt(1.0 - eps), math.sqrt(eps)
                answers.append(Q @ v)
            trace = black_box_pca(M, k, ScriptedOracle(answers))
            measured = epca_error(M, trace.frame).epsilon_achieved
            rows.add(d, k, {"eps": eps}, measured, eps, tol=1e-9, check="equal")
    return rows.rows


def run_cpca_valid_regime(params: Dict[str, Any], seed: int) -> List[ResultRow]:
    """
    cPCA reduction inside Delta kappa_k^2 <= Gamma^2

    Geometric and gapped spectra with kappa_k <= 2, Delta = Gamma^2 / (64 kappa_k^2)
    unless given. Each call is a certified power oracle at the per-call
    (delta, gamma) of the composition constant chain; the k-frame must be a
    (Delta, Gamma)-k-cPCA.
    """
    rows = RowCollector("cpca-valid-regime", seed)
    d, Gamma = params["d"], params["Gamma"]
    for kind in params["spectra"]:
        for k in params["k"]:
            if kind == "gapped":
                shape = {"d": d, "gap_at": max(1, k // 2), "Gamma": params["gap"]}
            else:
                shape = {"d": d, "ratio": params["ratio"]}
            M = spectrum_gen(kind, shape, seed=seed)
            kappa = cond_k(M, k)
            Delta = params["Delta"] if params["Delta"] is not None else Gamma**2 / (64.0 * kappa**2)
            info: Dict[str, Any] = {"spectrum": kind, "kappa": kappa, "Delta": Delta, "Gamma": Gamma}
            try:
                _, trace, measured, calls = cpca_theorem_check(M, k, Delta, Gamma, rng_seed=seed)
                info.update(delta=calls["delta"], gamma=calls["gamma"], max_call_delta=trace.max_per_call("delta"))
            except (BudgetExhausted, RegimeRejected) as e:
                measured = math.nan
                info["error"] = str(e)
            rows.add(d, k, info, measured, Delta, tol=THEOREM_TOL)
    return rows.rows


def run_invalid_regime(params: Dict[str, Any], seed: int) -> List[ResultRow]:
    """
    Counterexamples outside the valid regime

    For each Delta: the square-root-regime instance (exact second answer with
    u2_3^2 > Delta, closed-form lambda checked against eig_sym to 1e-10) and
    the linear-regime instance (final cPCA mass exactly 1). Witness rows are
    EXPECTED-FAIL-OF-REDUCTION when the replayed deflation leaks more than Delta.
    `delta` is accepted as an alias of `Delta`.
    """
    rows = RowCollector("invalid-regime", seed)
    targets = params["delta"] or params["Delta"]
    C = params["C"]
    for Delta in targets:
        try:
            inst = build_sqrt_regime_instance(Delta, C)
            meta = inst.metadata
            info = {"instance": "sqrt", "Delta": Delta, "Gamma": inst.Gamma, "delta": inst.delta}
            rows.add(3, 2, info, run_witness(inst), Delta, tol=THEOREM_TOL, expect_fail=True)
            info = {**info, "instance": "sqrt-lambda", "lambda": meta["lambda"]}
            rows.add(3, 2, info, abs(meta["lambda"] - meta["lambda_numeric"]), 0.0, tol=1e-10)
        except NotInRegime as e:
            rows.add(3, 2, {"instance": "sqrt", "Delta": Delta, "error": str(e)}, math.nan, Delta, expect_fail=True)

        try:
            inst = build_linear_regime_instance(Delta, params["kappa"], C)
            info = {"instance": "linear", "Delta": Delta, "Gamma": inst.Gamma, "kappa": inst.kappa}
            mass = run_witness(inst)
            rows.add(3, 2, info, mass, Delta, tol=THEOREM_TOL, expect_fail=True)
            rows.add(3, 2, {**info, "instance": "linear-exact"}, mass, 1.0, tol=1e-12, check="equal")
        except NotInRegime as e:
            rows.add(3, 2, {"instance": "linear", "Delta": Delta, "error": str(e)}, math.nan, Delta, expect_fail=True)
    return rows.rows


def _robust_sigma(d: int, k: int, spikes: Optional[Sequence[float]], seed: int) -> SymMatrix:
    spikes = list(spikes) if spikes else [1.0 + 3.0 * (k - i) / k for i in range(k)]
    return spectrum_gen("spiked", {"d": d, "spikes": spikes, "base": 1.0}, seed=seed)


def _robust_rows(name: str, params: Dict[str, Any], seed: int, heavy: bool) -> List[ResultRow]:
    rows = RowCollector(name, seed)
    d, k = params["d"], params["k"]
    rotation_seed, sample_seed, corrupt_seed = child_seeds(seed, 3)
    sigma = _robust_sigma(d, k, params["spikes"], rotation_seed)
    for eps in params["eps"]:
        if heavy:
            gamma = heavy_tailed_gamma(params["p"], params["Cp"], eps)
            bound = min(1.0, gamma)
            n = params["n"] or 20000
            raw = sampler_hypercontractive(params["p"], params["Cp"], sigma, n, seed=sample_seed)
            # clipped before corruption, at rho = gamma / 2
            R = clip_radius(params["p"], params["Cp"], min(gamma / 2.0, 1.0), float(np.trace(sigma.entries)))
            clean = clip_rows(raw, R)
            clipping = {"R": R, "clipped": float(np.mean(np.sum(raw**2, axis=1) > R))}
        else:
            gamma = subgaussian_stability_gamma(eps)
            bound = params["cap"] * gamma
            n = params["n"] or int(math.ceil(20.0 * d / gamma**2))
            clean = sampler_subgaussian(sigma, n, seed=sample_seed)
            clipping = {}
        sample = corrupt(clean, eps, params["strategy"], seed=corrupt_seed)
        if params["save_dataset"]:
            save_dataset(sample, os.path.join(DATASET_DIR, f"{name}-eps{eps}-seed{seed}.csv"))

        U = robust_kpca(sample.points, eps, gamma, k)
        naive = eig_sym(sample.points.T @ sample.points / n).top(k)
        info = {
            "eps": eps,
            "gamma": gamma,
            "n": n,
            "strategy": params["strategy"],
            "naive_error": epca_error(sigma, naive).epsilon_achieved,
            **clipping,
        }
        rows.add(d, k, info, epca_error(sigma, U).epsilon_achieved, bound)
    return rows.rows


def run_robust_subg(params: Dict[str, Any], seed: int) -> List[ResultRow]:
    """
    Robust k-ePCA of a Gaussian sample under strong contamination

    Spiked covariance, ceil(eps n) points replaced by the chosen adversary,
    n = 20 d / (eps log(1/eps))^2 unless given. Deflation with the filter
    oracle must reach epca_error <= cap * eps log(1/eps) (fitted cap 10).
    The naive top-k of the corrupted sample is reported alongside.
    """
    return _robust_rows("robust-subg", params, seed, heavy=False)


def run_robust_ht(params: Dict[str, Any], seed: int) -> List[ResultRow]:
    """
    Robust k-ePCA of a (p, Cp)-hypercontractive sample under strong contamination

    Same pipeline as robust-subg with gamma = Cp^2 eps^(1 - 2/p). The clean
    sample is clipped at R = (Cp^p / rho)^(2/(p-2)) Tr(Sigma), rho = gamma / 2,
    before the adversary corrupts it; R and the clipped fraction are recorded.
    The row bound is min(1, gamma).
    """
    return _robust_rows("robust-ht", params, seed, heavy=True)


def run_online_oja(params: Dict[str, Any], seed: int) -> List[ResultRow]:
    """
    Online heavy-tailed k-cPCA by clipped Oja deflation

    Spiked covariance, one pass over a seeded hypercontractive (or Gaussian)
    stream of n samples per entry of `n`. The returned frame must be a
    (Delta, Gamma)-k-cPCA of Sigma. Calibrated runs sit below the worst-case
    sample count, so BudgetWarnings are counted, not raised.
    """
    rows = RowCollector("online-oja", seed)
    d, k = params["d"], params["k"]
    rotation_seed, stream_seed = child_seeds(seed, 2)
    sigma = spectrum_gen("spiked", {"d": d, "spikes": params["spikes"], "base": params["base"]}, seed=rotation_seed)
    kappa = cond_k(sigma, k)
    for n in params["n"]:
        cfg = StreamConfig(
            n=n,
            d=d,
            k=k,
            Delta=params["Delta"],
            Gamma=params["Gamma"],
            p=params["p"],
            Cp=params["Cp"],
            beta=params["beta"],
            kappa=kappa,
            seed=seed,
            batch_size=params["batch_size"],
        )
        stream = SampleStream.from_sampler(params["stream"], sigma.entries, n, seed=stream_seed, p=params["p"])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", BudgetWarning)
            U = online_kcpca(stream, cfg)
        info = {
            "n": n,
            "Delta": cfg.Delta,
            "Gamma": cfg.Gamma,
            "kappa": kappa,
            "consumed": stream.consumed,
            "budget_warnings": sum(1 for w in caught if issubclass(w.category, BudgetWarning)),
        }
        rows.add(d, k, info, cpca_mass(sigma, U, cfg.Gamma).delta_achieved, cfg.Delta)
    return rows.rows


def run_composition_audit(params: Dict[str, Any], seed: int) -> List[ResultRow]:
    """
    Two-block cPCA composition and the dyadic merge tree

    `trials` random instances: U1 a perturbed top-k1 frame of a Wishart M,
    U2 a perturbed top-k2 frame of the deflated target, orthogonal to U1.
    The composed frame's mass at max(g1, 2 g2) must stay within the lemma's
    Delta. One more row runs the full reduction on a gapped spectrum and
    counts dyadic merges whose measured mass exceeds its prediction.
    """
    rows = RowCollector("composition-audit", seed)
    d, k1, k2 = params["d"], params["k1"], params["k2"]
    g1, g2, noise = params["g1"], params["g2"], params["noise"]
    for t in range(params["trials"]):
        rng = np.random.default_rng([seed, t])
        M = random_psd(d, rng)
        top1 = eig_sym(M).top(k1).columns
        U1 = Frame.orthonormalize(top1 + noise * rng.standard_normal((d, k1)))
        complement = U1.complement_projector()
        deflated = M.compress(complement)
        top2 = eig_sym(deflated).top(k2).columns
        U2 = Frame.orthonormalize(complement.apply(top2 + noise * rng.standard_normal((d, k2))))
        d1 = cpca_mass(M, U1, g1).delta_achieved
        d2 = cpca_mass(deflated, U2, g2).delta_achieved
        if max(d1, d2) > 0.1:
            continue
        bound = compose_bound(M, U1, U2, d1, d2, g1, g2)
        measured = cpca_mass(M, U1.hstack(U2), max(g1, 2.0 * g2)).delta_achieved
        rows.add(d, k1 + k2, {"merge": "two-block", "d1": d1, "d2": d2, "g1": g1, "g2": g2}, measured, bound, tol=THEOREM_TOL)

    k = params["audit_k"]
    M = spectrum_gen("gapped", {"d": d, "gap_at": max(1, k // 2), "Gamma": 0.3}, seed=seed)
    Gamma = params["audit_Gamma"]
    Delta = Gamma**2 / (64.0 * cond_k(M, k) ** 2)
    try:
        _, trace, _, calls = cpca_theorem_check(M, k, Delta, Gamma, rng_seed=seed)
        audit = dyadic_merge_audit(trace, M, delta=calls["delta"], gamma=calls["gamma"], Gamma_bar=params["audit_gap"])
        failures = sum(1 for node in audit["nodes"] if not node["holds"])
        info = {"merge": "dyadic", "boundaries": audit["boundaries"], "merges": audit["merges"]}
        rows.add(d, k, info, failures, 0.0)
        rows.add(d, k, {"merge": "telescoping"}, projector_telescoping_error(trace), IDENTITY_TOL)
    except (BudgetExhausted, RegimeRejected) as e:
        rows.add(d, k, {"merge": "dyadic", "error": str(e)}, math.nan, 0.0)
    return rows.rows


def run_clipping_bias(params: Dict[str, Any], seed: int) -> List[ResultRow]:
    """
    Clipping bias and tail at the corollary radius

    R = (Cp^p / rho)^(2/(p-2)) Tr(Sigma) on a hypercontractive sample of size n:
    ||E T_R(x) T_R(x)^T - Sigma||_op <= rho ||Sigma||_op and
    P(||x||^2 >= R) <= (rho / Cp^2)^(p/(p-2)), each with a 3-sigma sampling band.
    """
    rows = RowCollector("clipping-bias", seed)
    d, p, Cp, rho, n = params["d"], params["p"], params["Cp"], params["rho"], params["n"]
    rotation_seed, sample_seed = child_seeds(seed, 2)
    sigma = spectrum_gen("spiked", {"d": d, "spikes": params["spikes"], "base": 1.0}, seed=rotation_seed)
    trace = float(np.trace(sigma.entries))
    R = ClipConfig.from_corollary(p, Cp, rho, trace).R

    X = sampler_hypercontractive(p, Cp, sigma, n, seed=sample_seed)
    Xc = clip_rows(X, R)
    second = Xc.T @ Xc / n
    sq = Xc * Xc
    variance = np.clip(sq.T @ sq / n - second**2, 0.0, None)
    band = 3.0 * math.sqrt(float(np.sum(variance)) / n)
    info = {"p": p, "Cp": Cp, "rho": rho, "R": R, "n": n, "band": band}
    rows.add(d, 0, {**info, "quantity": "bias"}, op_norm(second - sigma.entries), rho * op_norm(sigma.entries) + band)

    tail = corollary_tail_bound(p, Cp, rho)
    freq = float(np.mean(np.sum(X * X, axis=1) >= R))
    tail_band = 3.0 * math.sqrt(tail * (1.0 - tail) / n)
    rows.add(d, 0, {**info, "quantity": "tail", "band": tail_band}, freq, tail + tail_band)
    return rows.rows


def run_perturbation_transfer(params: Dict[str, Any], seed: int) -> List[ResultRow]:
    """
    cPCA guarantee under an operator-norm perturbation

    At rho = sqrt(delta / (8k)) gamma lambda_k the transferred guarantee is
    exactly (3 delta, 2 gamma). Monte Carlo: `trials` triples (Sigma, Sigma_hat, U)
    with ||Sigma - Sigma_hat||_op <= rho and U a perturbed top-k frame of Sigma_hat;
    cpca_mass(Sigma, U, 2 gamma) must stay within 8k (rho / (gamma lambda_k))^2 + 2 delta_hat,
    and kappa_k(Sigma_hat) <= 2 kappa_k(Sigma).
    """
    rows = RowCollector("perturbation-transfer", seed)
    d, k, delta, gamma = params["d"], params["k"], params["delta"], params["gamma"]
    sigma = spectrum_gen("geometric", {"d": d, "ratio": params["ratio"]}, seed=seed)
    lam_k = float(eigenvalues(sigma)[k - 1])
    rho = corollary_rho(delta, gamma, lam_k, k)
    Delta_t, Gamma_t = perturbation_transfer(delta, gamma, rho, lam_k, k)
    rows.add(d, k, {"quantity": "closed-form", "rho": rho, "Gamma": Gamma_t}, Delta_t, 3.0 * delta, tol=1e-12, check="equal")

    for t in range(params["trials"]):
        rng = np.random.default_rng([seed, t])
        E = rng.standard_normal((d, d))
        E = (E + E.T) / 2.0
        E *= rho * rng.uniform(0.2, 1.0) / op_norm(E)
        sigma_hat = SymMatrix(sigma.entries + E)
        top = eig_sym(sigma_hat).top(k).columns
        U = Frame.orthonormalize(top + params["noise"] * rng.standard_normal((d, k)))
        delta_hat = cpca_mass(sigma_hat, U, gamma).delta_achieved
        if delta_hat > 0.1:
            continue
        bound, _ = perturbation_transfer(delta_hat, gamma, op_norm(E), lam_k, k)
        measured = cpca_mass(sigma, U, 2.0 * gamma).delta_achieved
        rows.add(d, k, {"quantity": "transfer", "delta_hat": delta_hat, "rho": op_norm(E)}, measured, bound, tol=1e-6)
        ratio = cond_k(sigma_hat, k) / cond_k(sigma, k)
        info = {"quantity": "kappa", "within_factor_two": kappa_transfer_check(sigma, sigma_hat, gamma, k)}
        rows.add(d, k, info, ratio, 2.0, tol=1e-9)
    return rows.rows


def run_stability_deflation(params: Dict[str, Any], seed: int) -> List[ResultRow]:
    """
    Stability survives deflation

    Paired Loewner audits of one weighting before and after projecting the
    sample and the reference covariance by a random projector P. The deflated
    violation never exceeds the original, so an (eps, gamma)-stable sample
    stays stable.
    """
    rows = RowCollector("stability-deflation", seed)
    d, n, eps, r = params["d"], params["n"], params["eps"], params["r"]
    sigma = spectrum_gen("geometric", {"d": d, "ratio": 0.8}, seed=seed)
    X = sampler_subgaussian(sigma, n, seed=child_seeds(seed, 1)[0])
    m = int(math.floor(eps * n))
    gamma = subgaussian_stability_gamma(eps)
    for t in range(params["trials"]):
        rng = np.random.default_rng([seed, t])
        w = np.ones(n)
        w[rng.choice(n, size=m, replace=False)] = 0.0
        P = random_projector(d, d - r, rng)
        before, after = paired_deflation_audit(X, w, sigma, P)
        info = {"eps": eps, "gamma": gamma, "original_stable": before <= gamma, "deflated_stable": after <= gamma}
        rows.add(d, d - r, info, after, before, tol=1e-9)
    return rows.rows


def run_facts(params: Dict[str, Any], seed: int) -> List[ResultRow]:
    """
    Classical facts on random instances

    Worst violation over `trials` instances of Cauchy interlacing, the best
    projection bound, Weyl, trace Cauchy-Schwarz and Loewner trace monotonicity
    (tolerance 1e-9); the worst Wedin identity residual over `wedin_trials`
    instances, half with repeated eigenvalues (tolerance 1e-8); and the
    projector telescoping error of an exact deflation.
    """
    rows = RowCollector("facts", seed)
    d = params["d"]
    rng = np.random.default_rng([seed, 0])
    worst = {"interlacing": 0.0, "best_proj": 0.0, "weyl": 0.0, "trace_cs": 0.0, "loewner_trace": 0.0}
    for _ in range(params["trials"]):
        M = random_psd(d, rng)
        r = int(rng.integers(1, d))
        worst["interlacing"] = max(worst["interlacing"], -interlacing_slack(M, random_frame(d, r, rng)))
        worst["best_proj"] = max(worst["best_proj"], -best_proj_slack(M, random_projector(d, d - r, rng)))
        D = rng.standard_normal((d, d))
        worst["weyl"] = max(worst["weyl"], -weyl_slack(M, (D + D.T) / 2.0))
        A, B = rng.standard_normal((d, d)), rng.standard_normal((d, d))
        worst["trace_cs"] = max(worst["trace_cs"], -trace_cs_slack(A, B))
        lower = random_psd(d, rng).entries
        upper = lower + random_psd(d, rng).entries
        worst["loewner_trace"] = max(worst["loewner_trace"], -loewner_trace_slack(lower, upper, M))
    for name, violation in worst.items():
        rows.add(d, 0, {"fact": name, "trials": params["trials"]}, max(violation, 0.0), 0.0, tol=1e-9)

    residual, skipped = 0.0, 0
    for t in range(params["wedin_trials"]):
        if t % 2:
            values = np.repeat(np.arange(d // 2 + d % 2, 0, -1, dtype=np.float64), 2)[:d]
            M = spectrum_gen("custom", {"values": values}, seed=int(rng.integers(2**31)))
        else:
            M = random_psd(d, rng)
        r = int(rng.integers(1, d - 1))
        k2 = int(rng.integers(1, d - r))
        try:
            value = wedin_residual(M, random_frame(d, r, rng), rng.uniform(0.0, 0.2), rng.uniform(0.0, 0.2), k2)
        except DegenerateResidual:
            skipped += 1
            continue
        residual = max(residual, value)
    rows.add(d, 0, {"fact": "wedin", "trials": params["wedin_trials"], "skipped": skipped}, residual, 0.0, tol=1e-8)

    trace = black_box_pca(random_psd(d, rng), d, ExactOracle())
    rows.add(d, d, {"fact": "telescoping"}, projector_telescoping_error(trace), 0.0, tol=IDENTITY_TOL)
    return rows.rows


# Registry


@dataclass(frozen=True)
class Experiment:
    name: str
    runner: Callable[[Dict[str, Any], int], List[ResultRow]]
    summary: str
    defaults: Dict[str, Any]

    @property
    def description(self) -> str:
        return inspect.getdoc(self.runner) or self.summary


EXPERIMENTS: Dict[str, Experiment] = {
    e.name: e
    for e in (
        Experiment(
            "epca-lossless",
            run_epca_lossless,
            "Adversarial eps-1-ePCA deflation stays an eps-k-ePCA",
            {"d": [16, 64], "k": [2, 4, 8], "eps": [0.01, 0.1]},
        ),
        Experiment(
            "epca-tightness",
            run_epca_tightness,
            "Scripted answers attain the ePCA bound exactly",
            {"k": [1, 2, 4], "eps": [0.01, 0.1]},
        ),
        Experiment(
            "cpca-valid-regime",
            run_cpca_valid_regime,
            "Certified power-oracle deflation is a (Delta, Gamma)-k-cPCA when Delta kappa^2 <= Gamma^2",
            {
                "d": 8,
                "k": [2, 3, 4],
                "spectra": ["geometric", "gapped"],
                "ratio": 0.8,
                "gap": 0.2,
                "Gamma": 0.2,
                "Delta": None,
            },
        ),
        Experiment(
            "invalid-regime",
            run_invalid_regime,
            "Linear and square-root counterexamples break the cPCA reduction",
            {"Delta": [1e-3, 1e-4], "delta": [], "kappa": 4.0, "C": 1.0},
        ),
        Experiment(
            "robust-subg",
            run_robust_subg,
            "Filter-oracle deflation on a corrupted Gaussian sample",
            {
                "d": 32,
                "k": 4,
                "eps": [0.02, 0.05],
                "n": None,
                "strategy": "large-spike",
                "spikes": None,
                "cap": ROBUST_RATE_CAP,
                "save_dataset": False,
            },
        ),
        Experiment(
            "robust-ht",
            run_robust_ht,
            "Filter-oracle deflation on a corrupted hypercontractive sample",
            {
                "d": 32,
                "k": 4,
                "eps": [0.02, 0.05],
                "n": None,
                "p": 4,
                "Cp": 2.0,
                "strategy": "large-spike",
                "spikes": None,
                "save_dataset": False,
            },
        ),
        Experiment(
            "online-oja",
            run_online_oja,
            "Single-pass clipped Oja deflation on a heavy-tailed stream",
            {
                "d": 16,
                "k": 2,
                "n": [30000],
                "Delta": 0.02,
                "Gamma": 0.5,
                "spikes": [2.0, 1.5],
                "base": 0.5,
                "p": 4,
                "Cp": 2.0,
                "beta": 0.1,
                "batch_size": 1,
                "stream": "hypercontractive",
            },
        ),
        Experiment(
            "composition-audit",
            run_composition_audit,
            "Two-block composition bound and dyadic merge-tree audit",
            {
                "d": 8,
                "k1": 2,
                "k2": 2,
                "g1": 0.1,
                "g2": 0.05,
                "noise": 0.02,
                "trials": 25,
                "audit_k": 4,
                "audit_Gamma": 0.2,
                "audit_gap": 0.2,
            },
        ),
        Experiment(
            "clipping-bias",
            run_clipping_bias,
            "Clipped covariance bias and tail frequency at the corollary radius",
            {"d": 16, "p": 4, "Cp": 2.0, "rho": 0.1, "n": 100000, "spikes": [4.0, 2.0]},
        ),
        Experiment(
            "perturbation-transfer",
            run_perturbation_transfer,
            "cPCA guarantee transfers from Sigma_hat to Sigma at (3 delta, 2 gamma)",
            {"d": 8, "k": 2, "delta": 0.01, "gamma": 0.05, "ratio": 0.7, "noise": 0.03, "trials": 10},
        ),
        Experiment(
            "stability-deflation",
            run_stability_deflation,
            "Paired stability audits before and after deflation",
            {"d": 8, "n": 2000, "eps": 0.05, "r": 2, "trials": 100},
        ),
        Experiment(
            "facts",
            run_facts,
            "Interlacing, best projection, Weyl, Wedin identity and friends",
            {"d": 8, "trials": 50, "wedin_trials": 25},
        ),
    )
}


class ExperimentFactory:
    """Factory class for looking up experiments"""

    @staticmethod
    def create_experiment(name: str) -> Experiment:
        """
        Look up an experiment by id

        Raises:
            ValueError: Unknown experiment id
        """
        name = name.lower().strip()
        if name not in EXPERIMENTS:
            raise ValueError(f"Unknown experiment type: {name}")
        return EXPERIMENTS[name]


def resolve_params(experiment: Experiment, overrides: Dict[str, Any]) -> Dict[str, Any]:
    """
    Experiment defaults updated with overrides

    List-valued defaults accept a scalar; scalar defaults accept a one-element list.

    Raises:
        InvalidInput: Unknown parameter, or several values for a scalar one
    """
    params = dict(experiment.defaults)
    for key, value in overrides.items():
        if key not in experiment.defaults:
            raise InvalidInput(f"{experiment.name} takes no parameter '{key}'")
        if isinstance(experiment.defaults[key], list):
            value = list(value) if isinstance(value, (list, tuple)) else [value]
        elif isinstance(value, (list, tuple)) and key not in ("spikes", "spectra"):
            if len(value) != 1:
                raise InvalidInput(f"parameter '{key}' of {experiment.name} takes a single value")
            value = value[0]
        params[key] = value
    return params


def parse_seeds(value: Union[str, int, Sequence[int]]) -> List[int]:
    """
    Seeds from '1..20', '1,2,5', a single integer or a list

    Raises:
        InvalidInput: Malformed, empty or negative seeds
    """
    if isinstance(value, bool):
        raise InvalidInput(f"malformed seeds: {value!r}")
    if isinstance(value, int):
        seeds = [value]
    elif isinstance(value, str):
        text = value.strip()
        span = re.fullmatch(r"(\d+)\.\.(\d+)", text)
        if span:
            lo, hi = int(span.group(1)), int(span.group(2))
            if hi < lo:
                raise InvalidInput(f"empty seed range: {text}")
            seeds = list(range(lo, hi + 1))
        elif re.fullmatch(r"\d+(\s*,\s*\d+)*", text):
            seeds = [int(s) for s in text.split(",")]
        else:
            raise InvalidInput(f"malformed seeds: {text!r} (use 1..20, 1,2,5 or 7)")
    else:
        seeds = [int(s) for s in value]
    if not seeds or min(seeds) < 0:
        raise InvalidInput(f"seeds must be a non-empty list of nonnegative integers, got {value!r}")
    return seeds


@dataclass
class ExperimentConfig:
    """Experiment id, seeds, parameter overrides and output settings"""

    experiment: str
    seeds: List[int] = field(default_factory=lambda: [DEFAULT_SEED])
    params: Dict[str, Any] = field(default_factory=dict)
    out: str = OUTPUT_DIR
    jobs: int = DEFAULT_JOBS
    timing: bool = True
    schema: int = CONFIG_SCHEMA

    def __post_init__(self):
        if self.schema != CONFIG_SCHEMA:
            raise InvalidInput(f"unsupported config schema {self.schema!r}; expected {CONFIG_SCHEMA}")
        experiment = ExperimentFactory.create_experiment(self.experiment)
        self.experiment = experiment.name
        self.seeds = parse_seeds(self.seeds)
        if self.jobs < 1:
            raise InvalidInput(f"jobs must be positive, got {self.jobs}")
        self.params = resolve_params(experiment, self.params)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """Build from parsed TOML: top-level settings plus [params] and [dataset] tables"""
        known = {"schema", "experiment", "seeds", "out", "jobs", "timing", "params", "dataset"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidInput(f"unknown config keys: {', '.join(unknown)}")
        if "schema" not in data:
            raise InvalidInput("config is missing 'schema'")
        if "experiment" not in data:
            raise InvalidInput("config is missing 'experiment'")
        params = {**data.get("dataset", {}), **data.get("params", {})}
        return cls(
            experiment=data["experiment"],
            seeds=data.get("seeds", [DEFAULT_SEED]),
            params=params,
            out=data.get("out", OUTPUT_DIR),
            jobs=int(data.get("jobs", DEFAULT_JOBS)),
            timing=bool(data.get("timing", True)),
            schema=data["schema"],
        )

    @classmethod
    def from_toml(cls, path: str) -> "ExperimentConfig":
        with open(path, "rb") as f:
            try:
                data = tomllib.load(f)
            except tomllib.TOMLDecodeError as e:
                raise InvalidInput(f"malformed config {path}: {e}") from e
        return cls.from_dict(data)

    def with_overrides(self, params: Dict[str, Any], **settings) -> "ExperimentConfig":
        """Copy with CLI overrides applied on top of this config"""
        merged = {**self.params, **params}
        return dataclasses.replace(self, params=merged, **settings)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": self.schema,
            "experiment": self.experiment,
            "seeds": list(self.seeds),
            "params": dict(self.params),
            "out": self.out,
        }


def run_seed(name: str, params: Dict[str, Any], seed: int, timing: bool = True) -> List[ResultRow]:
    """Run one seed of an experiment (top-level so worker processes can pickle it)"""
    rows = ExperimentFactory.create_experiment(name).runner(params, seed)
    if not timing:
        rows = [dataclasses.replace(row, ms=0.0) for row in rows]
    return rows
