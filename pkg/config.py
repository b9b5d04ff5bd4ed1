"""
Configuration file for weylsheet
Loads process-wide defaults from environment variables
"""

import os
import logging
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# ============================================
# Runtime Configuration
# ============================================
# Every value has a default; a missing .env is fine
LOG_LEVEL = os.getenv('WEYLSHEET_LOG_LEVEL', 'INFO')
THREADS = int(os.getenv('WEYLSHEET_THREADS', '1'))
OUTPUT_DIR = os.getenv('WEYLSHEET_OUTPUT_DIR', './weylsheet_output')

# Solver tolerance scale (relative to max |K - r/2|)
SOLVER_TOLERANCE = float(os.getenv('WEYLSHEET_TOLERANCE', '1e-8'))
SOLVER_MAX_ITER_FACTOR = 10  # iteration cap = factor * unknowns

# ============================================
# Numerical Policy
# ============================================
# Chart point is degenerate when |r_1 x r_2| < ratio * |r_1| |r_2|
DEGENERACY_RATIO = 1e-12

# max |det b| * diameter^4 below this means developable
DEVELOPABLE_TOLERANCE = 1e-8

# Frenet frame is indeterminate when kappa < ratio * gradient scale
FRENET_KAPPA_RATIO = 1e-8

# Directional derivative step as a fraction of the sample box diameter
FD_STEP_RATIO = 1e-3

# Truncation order of the finite-difference jets of sampled surfaces
FD_ACCURACY = 4

# Absolute tolerance for sigma(theta) quadrature
QUAD_ABS_TOL = 1e-10

# ============================================
# Output Formatting
# ============================================
CSV_FLOAT_FORMAT = "%.17g"

# Grid file magic
GRID_MAGIC = "weylsheet-grid"
GRID_VERSION = "v1"

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = None) -> None:
    """Attach a single stderr handler to the package loggers."""
    root = logging.getLogger("weylsheet")
    root.setLevel((level or LOG_LEVEL).upper())
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(_LOG_FORMAT))
        root.addHandler(handler)
