"""
🎛️ SAMPLER LIBRARY CONTROL PANEL
================================

This file contains the library-wide defaults for the Metropolis-Hastings
contraction toolkit. Experiment-specific settings (model, proposal, seed,
step counts) live in the YAML experiment files under `configs/`; the values
here are the defaults those experiments fall back on.

HOW TO USE:
1. Edit the values below to change library behavior
2. Save the file
3. Run: py run_experiment.py <experiment> --config configs/<file>.yaml

TIPS:
- Keep the seeds fixed when comparing runs; every report embeds the seed
- The unspecified analytic constants default to 1 and are echoed in every report
"""

# =============================================================================
# 📁 OUTPUT SETTINGS
# =============================================================================

OUTPUT_DIRECTORY = "reports"           # Default report folder when the experiment file gives none
REPORT_FORMATS = ["csv", "json"]       # Record formats written next to the .meta.json sidecar
LOGS_DIRECTORY = "logs"                # Log file folder (relative to the report folder)

# =============================================================================
# ⚡ PERFORMANCE SETTINGS
# =============================================================================

# Worker count is read from this environment variable; unset = sequential
WORKER_ENV_VAR = "MHCONTRACT_WORKERS"

# Storing full trajectories is refused above this many floats (n_steps * d)
MAX_TRAJECTORY_ENTRIES = 20_000_000

# =============================================================================
# 🎲 MONTE CARLO SETTINGS
# =============================================================================

MOMENT_SAMPLES = 1_000_000             # Samples for E||Z||_-^n when no closed form exists
MOMENT_SEED = 20130101                 # Fixed seed for those moment estimates
FINITE_DIFFERENCE_STEP = 1e-5          # Central-difference step for gradient checks
SCALING_MAX_RELATIVE_STD_ERROR = 0.2   # Scaling fits drop points noisier than this
SCALING_MIN_POINTS = 3                 # Scaling fits need at least this many usable points
CONFIDENCE_SIGMAS = 3.0                # All dominance checks use estimate <= bound + 3 se

# =============================================================================
# 🧮 ANALYTIC CONSTANTS (left unspecified by the theory, user supplied)
# =============================================================================

UNSPECIFIED_CONSTANTS = {
    "A": 1.0,          # OU contraction constant
    "C_main": 1.0,     # step-size regime h^-1 >= C (1+R)^q
    "D_main": 1.0,     # convergence bound prefactor
    "q_main": 1.0,     # step-size regime exponent
    "rho": 1.0,        # exit-bound regime exponent
    "C2_lyap": 1.0,    # Lyapunov drift constant
    "D_exit": 1.0,     # exit-probability prefactor
    "D_bar": 1.0,      # final-distance prefactor
}

# =============================================================================
# 📐 STEP PLANNER
# =============================================================================

PLANNER_START_RADIUS = 1.0             # First radius on the geometric grid
PLANNER_GRID_RATIO = 1.1               # Ratio between consecutive radii
PLANNER_MAX_RADIUS = 1.0e4             # Give up (infeasible) beyond this radius

# =============================================================================
# 🛤️ TRANSITION PATH SAMPLING MODEL
# =============================================================================

TPS_DEFAULT_ALPHA = 0.6                # alpha-norm exponent
TPS_DEFAULT_Q = 8                      # L^q exponent defining the dimension-free window
TPS_DEFAULT_POTENTIAL = "double_well"  # H(z) = (z^2 - 1)^2 / 4 per coordinate

# =============================================================================
# 📊 LOGGING AND MONITORING
# =============================================================================

LOG_LEVEL = "INFO"                     # DEBUG, INFO, WARNING, ERROR
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"
LOG_TO_FILE = True                     # Also write a log file into the report folder
SHOW_PROGRESS_BAR = True               # tqdm bars around replica and h-grid loops

# =============================================================================
# ⚠️  DO NOT MODIFY BELOW THIS LINE
# =============================================================================

def get_config():
    """Return all configuration settings as a dictionary."""
    config = {}

    import sys
    current_module = sys.modules[__name__]

    for name in dir(current_module):
        if not name.startswith('_') and name.isupper():
            value = getattr(current_module, name)
            if not callable(value):
                config[name] = value

    return config

if __name__ == "__main__":
    print("🎛️ Current Sampler Library Configuration:")
    print("=" * 50)

    for key, value in get_config().items():
        print(f"{key}: {value}")

    print("\n💡 To run an experiment: py run_experiment.py scaling --config configs/scaling_tps.yaml")
