"""
Configuration for stream_verify.

Values come from (highest precedence first) command-line flags, the
environment / .env.local at the repository root, and the defaults below.
See .env.example for the full list of variables.
"""

import math
import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables
env_path = Path(__file__).parent.parent.parent / '.env.local'
load_dotenv(env_path)

REPO_ROOT = Path(__file__).parent.parent.parent

# Eigensolver tolerances (relative); the coarse one is only used for ||J||
TOL_EIG = float(os.getenv('STREAM_VERIFY_TOL_EIG', '1e-10'))
TOL_EIG_J = float(os.getenv('STREAM_VERIFY_TOL_EIG_J', '1e-2'))
EIG_MAXITER = int(os.getenv('STREAM_VERIFY_EIG_MAXITER', '5000'))

# Pencils up to this size go straight to the dense path
DENSE_LIMIT = int(os.getenv('STREAM_VERIFY_DENSE_LIMIT', '40'))

# Adaptive loop
THETA = float(os.getenv('STREAM_VERIFY_THETA', '0.5'))
MAX_NDOF = int(float(os.getenv('STREAM_VERIFY_MAX_NDOF', '2e5')))

# Newton
NEWTON_TOL = float(os.getenv('STREAM_VERIFY_NEWTON_TOL', '1e-11'))
NEWTON_MAXITER = int(os.getenv('STREAM_VERIFY_NEWTON_MAXITER', '50'))
DAMPING_FLOOR = 2.0 ** -10

# Element batch size for vectorised assembly
CHUNK = int(os.getenv('STREAM_VERIFY_CHUNK', '4096'))

# Output
OUTPUT_DIR = Path(os.getenv('STREAM_VERIFY_OUTPUT_DIR', str(REPO_ROOT / 'output')))
LOG_DIR = Path(os.getenv('STREAM_VERIFY_LOG_DIR', str(REPO_ROOT / 'logs')))

# Interpolation and Poincare constants on right-isosceles triangulations
RIGHT_ISOSCELES_CONSTANTS = {
    'C_P': 1.0 / (math.sqrt(2.0) * math.pi),
    'C_tr1': math.sqrt(5.0) / (3.0 * math.sqrt(2.0)),
    'kappa1': 0.1653,
    'kappa2': 0.0451,
}

# General shape-regular fallback (C_tr1 is computed from the mesh)
GENERAL_CONSTANTS = {
    'C_P': 1.0 / math.pi,
    'kappa1': 0.2983,
    'kappa2': 0.2359,
}

# Round-off thresholds
GEOMETRY_TOL = 1e-12
NEGATIVE_RITZ_CLAMP = 1e-12
NEGATIVE_QUADRATIC_CLAMP = 1e-14
SINGULAR_RADIUS = 1e-12

# Highest polynomial degree a piece may carry
MAX_DEGREE = 13
