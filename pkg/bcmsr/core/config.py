# Application metadata
APP_TITLE = "bcmsr - secrecy regions of the broadcast channel with feedback"
APP_DESCRIPTION = (
    "Evaluates, derives and simulates secrecy-rate regions of the two-user "
    "broadcast channel with mutual secrecy and noiseless feedback"
)
APP_VERSION = "1.0.0"

# Probability tables
PMF_SUM_TOL = 1e-12
ZERO_PROB_TOL = 1e-15
MI_CLAMP_TOL = 1e-10

# Regions
FACTORIZATION_TOL = 1e-9
REGION_TOL = 1e-9
SNAP_TO_ZERO_TOL = 1e-12
RATIONAL_MAX_DENOMINATOR = 10**12
SAMPLE_MEMBERSHIP_POINTS = 2**12

# Sweeps
GRID_RESOLUTION = 201
SWEEP_P_POINTS = 26

# Verification suite
VERIFY_GRID_POINTS = 5
STRICT_INCLUSION_GAP = 1e-3
COLLAPSE_SAMPLES = 20
FME_SAMPLE_POINTS = 10_000

# Key simulation
EXHAUSTIVE_CELL_LIMIT = 2**24
TABLE_COLORING_LIMIT = 2**24
BOOTSTRAP_RESAMPLES = 32
MC_BATCH_CELLS = 2**22
DEFAULT_TRIALS = 10_000
DEFAULT_SEED = 0
COLORING_STREAM = 0x5EED
BOOTSTRAP_STREAM = 0xB007
MESSAGE_STREAM = 0x3E55

# Artifacts
CSV_SIGNIFICANT_DIGITS = 12
SVG_SIZE = 800
SVG_MARGIN = 70

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
