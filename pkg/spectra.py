#!/usr/bin/env python3
"""
Spectrum Generators

Builds the PSD targets used by the experiments: a prescribed diagonal
spectrum rotated by a seeded Haar orthogonal matrix, so eig_sym of the result
gives back the requested eigenvalues.

Usage:
    from spectra import spectrum_gen

    M = spectrum_gen("geometric", {"d": 8, "ratio": 0.9}, seed=3)
    G = spectrum_gen("gapped", {"d": 4, "gap_at": 2, "Gamma": 0.3})

Kinds:
    - gapped: geometric head of size gap_at, then a drop below (1 - Gamma) lambda_gap_at
    - flat: every eigenvalue equal to `value`
    - geometric: lambda_i = top * ratio^(i-1)
    - spiked: `spikes` on top of a flat `base`
    - custom: explicit `values`
"""

from typing import Any, Dict

import numpy as np

from linalg_core import SymMatrix, random_orthogonal
from pca_errors import InvalidInput

SPECTRUM_KINDS = ("gapped", "flat", "geometric", "spiked", "custom")


def _dim(params: Dict[str, Any]) -> int:
    d = int(params.get("d", 0))
    if d < 1:
        raise InvalidInput(f"spectrum needs a positive dimension, got d={d}")
    return d


def spectrum_values(kind: str, params: Dict[str, Any]) -> np.ndarray:
    """
    Requested eigenvalues, nonincreasing

    Args:
        kind: 'gapped', 'flat', 'geometric', 'spiked' or 'custom'
        params: Kind-specific parameters (see module docstring)

    Returns:
        1-D array of eigenvalues
    """
    kind = kind.lower().strip()

    if kind == "custom":
        values = np.asarray(params.get("values", []), dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise InvalidInput("custom spectrum needs a non-empty 'values' list")
    elif kind == "flat":
        values = np.full(_dim(params), float(params.get("value", 1.0)))
    elif kind == "geometric":
        ratio = float(params.get("ratio", 0.9))
        if not 0.0 < ratio <= 1.0:
            raise InvalidInput(f"geometric ratio={ratio} outside (0, 1]")
        values = float(params.get("top", 1.0)) * ratio ** np.arange(_dim(params))
    elif kind == "spiked":
        d = _dim(params)
        spikes = [float(s) for s in params.get("spikes", [])]
        if len(spikes) > d:
            raise InvalidInput(f"{len(spikes)} spikes do not fit in d={d}")
        values = np.full(d, float(params.get("base", 1.0)))
        values[: len(spikes)] = spikes
    elif kind == "gapped":
        d = _dim(params)
        gap_at = int(params.get("gap_at", 1))
        Gamma = float(params.get("Gamma", 0.3))
        if not 1 <= gap_at < d:
            raise InvalidInput(f"gap_at={gap_at} outside [1, {d - 1}]")
        if not 0.0 < Gamma < 1.0:
            raise InvalidInput(f"Gamma={Gamma} outside (0, 1)")
        head = float(params.get("top", 1.0)) * float(params.get("head_ratio", 0.85)) ** np.arange(gap_at)
        start = (1.0 - Gamma) * head[-1] * (1.0 - float(params.get("margin", 0.05)))
        tail = start * float(params.get("tail_ratio", 0.9)) ** np.arange(d - gap_at)
        values = np.concatenate([head, tail])
    else:
        raise ValueError(f"Unknown spectrum type: {kind}")

    return np.sort(values)[::-1].copy()


def spectrum_gen(kind: str, params: Dict[str, Any], seed: int = 0, rotate: bool = True, psd: bool = True) -> SymMatrix:
    """
    Diagonal spectrum rotated by a seeded random orthogonal matrix

    Args:
        kind: Spectrum kind
        params: Kind-specific parameters
        seed: Seed of the rotation
        rotate: Return the diagonal matrix itself when False
        psd: Require strictly positive eigenvalues

    Returns:
        SymMatrix Q diag(values) Q^T

    Raises:
        InvalidInput: Nonpositive eigenvalue when psd is required
    """
    values = spectrum_values(kind, params)
    if psd and values[-1] <= 0.0:
        raise InvalidInput(f"{kind} spectrum has a nonpositive eigenvalue {values[-1]:.3e}")
    if not rotate:
        return SymMatrix.diag(values)
    Q = random_orthogonal(values.shape[0], np.random.default_rng(seed))
    return SymMatrix((Q * values[None, :]) @ Q.T)
