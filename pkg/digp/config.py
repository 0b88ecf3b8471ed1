"""
DiGP Configuration - constants and environment overrides

Module-level settings shared by the solvers, the round-based simulator and
the experiment runner. Values marked "env" can be overridden from the
environment or from a local .env file.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# ============================================================================
# PATHS
# ============================================================================

PACKAGE_DIR = Path(__file__).parent
PRESETS_DIR = Path(os.getenv("DIGP_PRESETS_DIR", str(PACKAGE_DIR / "presets")))  # env

# ============================================================================
# NUMERICAL KERNELS
# ============================================================================

# Relative singular-value cutoff for every least-squares solve
PINV_RCOND = 1e-10

# modSP: hard cap on expand/prune passes
MODSP_MAX_ITERATIONS = 100

# FROGS: forward-add steps allowed per call = factor * (K_max + 1)
FROGS_MAX_FORWARD_FACTOR = 20

# ============================================================================
# SIMULATION
# ============================================================================

DEFAULT_ROUND_CAP = int(os.getenv("DIGP_ROUND_CAP", "50"))  # env

# ============================================================================
# EXPERIMENTS
# ============================================================================

# alpha in 0.10 .. 0.25, step 0.01 (filtered to integral M at run time)
DEFAULT_ALPHA_GRID = [round(0.10 + 0.01 * i, 2) for i in range(16)]

DEFAULT_WORKERS = int(os.getenv("DIGP_WORKERS", "1"))  # env
DEFAULT_LOG_LEVEL = os.getenv("DIGP_LOG_LEVEL", "INFO")  # env

CSV_HEADER = [
    "alpha", "algorithm", "topology", "smnr_db", "signal", "srer_db", "asce",
    "outer_mean", "outer_std", "inner_mean", "inner_std", "realizations",
    "wall_seconds",
]

TRACE_HEADER = ["run_id", "node", "round", "eta", "support_overlap", "inner_iters"]

# Baseline algorithm for the timing-ratio table
TIMING_BASELINE = "sp"
