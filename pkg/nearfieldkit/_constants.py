#
# For licensing see accompanying LICENSE.md file.
#
import os

from scipy.constants import c as SPEED_OF_LIGHT  # noqa: F401

# Reference system (full-scale experiments)
DEFAULT_N_ELEMENTS = 127
DEFAULT_CARRIER_FREQ = 28e9  # Hz
DEFAULT_N_SUBCARRIERS = 256
DEFAULT_SUBCARRIER_SPACING = 480e3  # Hz
DEFAULT_N_SYMBOLS = 100
DEFAULT_SNR_DB = 0.
DEFAULT_COHERENCE_THRESHOLD = 0.1
DEFAULT_TRIALS = 50
DEFAULT_SEED = 0

# Field of view in directional cosine
FOV_ALPHA_LIMIT = 0.5

# Search grid for the MUSIC benchmarks
DEFAULT_THETA_MIN_DEG = 60.
DEFAULT_THETA_MAX_DEG = 120.
DEFAULT_THETA_STEP_DEG = 0.1
DEFAULT_N_SEARCH_RANGES = 64
SPECTRUM_EPS = 1e-12

# Boundary solvers
DEFAULT_BOUNDARY_THETA_DEG = 60.
DEFAULT_BOUNDARY_RHO = 0.9
DEFAULT_SCAN_POINTS = 2048
DEFAULT_SCAN_R_LO = 1e-2  # m
DEFAULT_SCAN_R_HI_RAYLEIGH_MULTIPLE = 10.
BOUNDARY_RTOL = 1e-4

# Curvature coherence threshold solver
DEFAULT_ZETA_MAX = 200.
ZETA_XTOL = 1e-4
ZETA_SCAN_STEP = 1e-3
FRESNEL_QUAD_TOL = 1e-8

# SOMP rejects an atom whose component outside the current support falls below this fraction
SOMP_RANK_TOL = 1e-10

# Dirichlet kernels are evaluated by their limit below this argument magnitude
DIRICHLET_SINGULARITY_TOL = 1e-12

# Capacity guards, override to fit the host
MAX_DICTIONARY_ENTRIES = int(os.getenv("NEARFIELDKIT_MAX_DICTIONARY_ENTRIES", None) or 2 ** 28)
MAX_WBFF_DIMENSION = int(os.getenv("NEARFIELDKIT_MAX_WBFF_DIMENSION", None) or 4096)
NUM_PROC = int(os.getenv("NEARFIELDKIT_NUM_PROC", None) or 1)

# Steering blocks are generated in chunks of this many grid cells
SPECTRUM_CHUNK_SIZE = 4096

# CLI exit codes
EXIT_CONFIG_ERROR = 2
EXIT_CAPACITY_ERROR = 3
EXIT_UNSATISFIABLE = 4
