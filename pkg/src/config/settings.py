"""
Library settings for the Metropolis-Hastings contraction toolkit.
Loads defaults from the main config.py file.
"""

import os
import sys
from typing import Dict, List, Optional

try:
    # Add the repository root to the path so we can import config.py
    sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.dirname(__file__))))
    import config
    CONFIG = config.get_config()
except ImportError:
    print("⚠️  Warning: config.py not found, using default settings")
    CONFIG = {}

# Output settings
DEFAULT_OUTPUT_DIR = CONFIG.get("OUTPUT_DIRECTORY", "reports")
REPORT_FORMATS: List[str] = list(CONFIG.get("REPORT_FORMATS", ["csv", "json"]))
LOGS_DIR = CONFIG.get("LOGS_DIRECTORY", "logs")

# Performance settings
WORKER_ENV_VAR = CONFIG.get("WORKER_ENV_VAR", "MHCONTRACT_WORKERS")
MAX_TRAJECTORY_ENTRIES = int(CONFIG.get("MAX_TRAJECTORY_ENTRIES", 20_000_000))

# Monte Carlo settings
MOMENT_SAMPLES = int(CONFIG.get("MOMENT_SAMPLES", 1_000_000))
MOMENT_SEED = int(CONFIG.get("MOMENT_SEED", 20130101))
FINITE_DIFFERENCE_STEP = float(CONFIG.get("FINITE_DIFFERENCE_STEP", 1e-5))
SCALING_MAX_RELATIVE_STD_ERROR = float(CONFIG.get("SCALING_MAX_RELATIVE_STD_ERROR", 0.2))
SCALING_MIN_POINTS = int(CONFIG.get("SCALING_MIN_POINTS", 3))
CONFIDENCE_SIGMAS = float(CONFIG.get("CONFIDENCE_SIGMAS", 3.0))

# Constants the theory leaves unspecified
UNSPECIFIED_CONSTANTS: Dict[str, float] = {
    "A": 1.0, "C_main": 1.0, "D_main": 1.0, "q_main": 1.0,
    "rho": 1.0, "C2_lyap": 1.0, "D_exit": 1.0, "D_bar": 1.0,
}
UNSPECIFIED_CONSTANTS.update(CONFIG.get("UNSPECIFIED_CONSTANTS", {}))

# Step planner
PLANNER_START_RADIUS = float(CONFIG.get("PLANNER_START_RADIUS", 1.0))
PLANNER_GRID_RATIO = float(CONFIG.get("PLANNER_GRID_RATIO", 1.1))
PLANNER_MAX_RADIUS = float(CONFIG.get("PLANNER_MAX_RADIUS", 1.0e4))

# Transition path sampling model
TPS_DEFAULT_ALPHA = float(CONFIG.get("TPS_DEFAULT_ALPHA", 0.6))
TPS_DEFAULT_Q = int(CONFIG.get("TPS_DEFAULT_Q", 8))
TPS_DEFAULT_POTENTIAL = CONFIG.get("TPS_DEFAULT_POTENTIAL", "double_well")

# Logging settings
LOG_FORMAT = CONFIG.get("LOG_FORMAT", "%(asctime)s - %(levelname)s - %(name)s - %(message)s")
LOG_LEVEL = CONFIG.get("LOG_LEVEL", "INFO")
LOG_TO_FILE = CONFIG.get("LOG_TO_FILE", True)
SHOW_PROGRESS_BAR = CONFIG.get("SHOW_PROGRESS_BAR", True)


def worker_count() -> Optional[int]:
    """Worker count from the environment; None means sequential."""
    raw = os.environ.get(WORKER_ENV_VAR)
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        return None
    return value if value > 1 else None
