"""
Configuration module for the coupled pendula workbench
"""
import math
import os

from dotenv import load_dotenv

load_dotenv()

# Integrator Configuration
ABS_TOL = float(os.getenv('PENDULA_ABS_TOL', 1e-10))
REL_TOL = float(os.getenv('PENDULA_REL_TOL', 1e-10))
MAX_STEP = float(os.getenv('PENDULA_MAX_STEP', 0.1))
MIN_STEP = float(os.getenv('PENDULA_MIN_STEP', 1e-14))  # below this the step is considered underflowed
RK4_STEP = float(os.getenv('PENDULA_RK4_STEP', 0.01))
SAMPLE_INTERVAL = float(os.getenv('PENDULA_SAMPLE_INTERVAL', 0.05))

# Lyapunov Configuration
REORTH_PERIOD = float(os.getenv('PENDULA_REORTH_PERIOD', 1.0))
LYAPUNOV_T = float(os.getenv('PENDULA_LYAPUNOV_T', 1e4))
# Max exponent above this marks an orbit CHAOTIC
CHAOS_THRESHOLD = float(os.getenv('PENDULA_CHAOS_THRESHOLD', 1e-2))
# Allowed relative drift of the max exponent over the last decade of time
CONVERGENCE_DRIFT = float(os.getenv('PENDULA_CONVERGENCE_DRIFT', 0.2))

# Spectral Configuration
JACOBI_TOL = float(os.getenv('PENDULA_JACOBI_TOL', 1e-12))
JACOBI_MAX_SWEEPS = int(os.getenv('PENDULA_JACOBI_MAX_SWEEPS', 100))
SIGN_SEARCH_MAX_N = int(os.getenv('PENDULA_SIGN_SEARCH_MAX_N', 16))

# Reduced system root finding
ROOT_GRID_STEP = float(os.getenv('PENDULA_ROOT_GRID_STEP', math.pi / 200.0))
ROOT_TOL = float(os.getenv('PENDULA_ROOT_TOL', 1e-12))

# Potential sanity check grid: [-2pi, 2pi]^2 sampled 201 x 201
POTENTIAL_CHECK_HALF_WIDTH = 2.0 * math.pi
POTENTIAL_CHECK_POINTS = 201
POTENTIAL_CHECK_TOL = 1e-12

# Output Configuration
OUTPUT_DIR = os.getenv('PENDULA_OUTPUT_DIR', 'runs')
JOBS = int(os.getenv('PENDULA_JOBS', 1))
SEED = int(os.getenv('PENDULA_SEED', 0))
LOG_LEVEL = os.getenv('PENDULA_LOG_LEVEL', 'WARNING').upper()
