#!/usr/bin/env python3
"""
PCA Lab Configuration

Central place for environment-driven settings, tolerances and the calibrated
constants used by the oracles and pipelines. Values come from a local .env
file (via python-dotenv) or the process environment.

Usage:
    from pca_config import DEFAULT_SEED, IDENTITY_TOL, say

    say("🔍 Checking spectrum...")
"""

import os

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

BASE_DIR = os.path.dirname(os.path.abspath(__file__))

# Data paths
OUTPUT_DIR = os.getenv("PCA_LAB_OUTPUT_DIR", os.path.join(BASE_DIR, "data", "output"))
DATASET_DIR = os.path.join(BASE_DIR, "data", "datasets")
EXAMPLES_DIR = os.path.join(BASE_DIR, "data", "examples")

# Runtime settings
DEFAULT_SEED = int(os.getenv("PCA_LAB_SEED", "0"))
DEFAULT_JOBS = int(os.getenv("PCA_LAB_JOBS", "1"))
DEFAULT_EIGEN_SOLVER = "jacobi"
EIGEN_SOLVER = os.getenv("PCA_LAB_EIGEN_SOLVER", DEFAULT_EIGEN_SOLVER).lower().strip()
MAX_SAMPLES = int(os.getenv("PCA_LAB_MAX_SAMPLES", "400000"))
VERBOSE = os.getenv("PCA_LAB_VERBOSE", "0").strip() in ("1", "true", "yes")

# Tolerances
IDENTITY_TOL = 1e-8
EIG_RECON_TOL = 1e-10
ORTHO_TOL = 1e-10
SPAN_TOL = 1e-8
NORM_TOL = 1e-10
SINGULAR_TOL = 1e-14
JACOBI_TOL = 1e-12

# Calibrated constants (desk scale)
OJA_N_CONSTANT = 8.0
CLIP_R_CONSTANT = 4.0
FILTER_ROUNDS_FACTOR = 4
AUDIT_TRIALS = 500
AUDIT_DIRECTIONS = 3
ROBUST_RATE_CAP = 10.0
DEFAULT_BETA = 0.1
POWER_MAX_ITERS = 5000

CONFIG_SCHEMA = 1


def say(message: str) -> None:
    """Print a progress message when PCA_LAB_VERBOSE is enabled"""
    if VERBOSE:
        print(message)
