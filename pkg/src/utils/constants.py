"""Numerical defaults shared across the package."""

# Smooth step / cutoff
CUTOFF_K_INSET = 3.0  # K sits 3 delta inside the boundary
CUTOFF_O0_INSET = 2.0  # O_0 sits 2 delta inside the boundary
CUTOFF_O0_DELTA_INSET = 1.5  # O_0^delta is the delta/2 enlargement of O_0

# Boundary tolerance for normals and membership checks
BOUNDARY_TOLERANCE = 1e-9
MEMBERSHIP_TOLERANCE = 1e-8

# Simulation
RNG_BLOCK_INTERVALS = 256  # noise drawn per path in blocks of observation intervals
SUBSTEP_DELTA_FRACTION = 0.1  # substep spread limited to a tenth of delta
FINITE_DIFFERENCE_STEP = 1e-5

# Wavelets
DEFAULT_TABLE_RESOLUTION = 12
DEFAULT_QUADRATURE_EXTRA_LEVELS = 4  # quadrature at 2^(J+4) points per unit length
MIN_DAUBECHIES_ORDER = 2
MAX_DAUBECHIES_ORDER = 10

# Estimation
LSTSQ_RCOND = 1e-10
DEFAULT_TRUNCATION_M = 10.0
DEFAULT_BN_KAPPA = 0.5

# Link / prior
DEFAULT_F_MIN = 0.25
DEFAULT_MATERN_JITTER = 1e-8
MATERN_JITTER_GROWTH = 100.0
MAX_MATERN_GRID_POINTS = 4096

# pCN adaptation
PCN_TARGET_ACCEPTANCE = (0.15, 0.4)
PCN_ADAPT_WINDOW = 50
PCN_WARN_ACCEPTANCE = (0.01, 0.99)

# Geodesics
DEFAULT_GEODESIC_KNOTS = 64
DEFAULT_DIJKSTRA_LATTICE = 200

# Harness
BOOTSTRAP_RESAMPLES = 200
MIN_SLOPE_POINTS = 3
