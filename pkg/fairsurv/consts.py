"""
Constants
=========

Those constants are shared across the modules: error codes returned by the
config validation, process exit codes, column kinds, default seeds and the
numerical defaults of the calculations.
"""

ERROR_CODE_VALIDATION = 'validation_errors'

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4
EXIT_INFEASIBLE = 5

CONTINUOUS = 'continuous'
BINARY = 'binary'
CATEGORICAL = 'categorical'
INDICATOR = 'indicator'
COLUMN_KINDS = (CONTINUOUS, BINARY, CATEGORICAL)

NORMAL = 'normal'
LOGNORMAL = 'lognormal'
BERNOULLI = 'bernoulli'
DISTRIBUTIONS = (NORMAL, LOGNORMAL, BERNOULLI, CATEGORICAL)

CENSORING_NONE = 'none'
CENSORING_EXPONENTIAL = 'exponential'
CENSORING_DELAYED_UNIFORM = 'delayed_uniform'
CENSORING_VARIANTS = (
    CENSORING_NONE, CENSORING_EXPONENTIAL, CENSORING_DELAYED_UNIFORM)

EXPONENTIAL = 'exponential'
WEIBULL = 'weibull'

SCALE_RISK = 'risk'
SCALE_LOGLOG = 'loglog'

# Seeds used when the run config leaves them unset.
SEED_CALIBRATION = 20240601
SEED_SIMULATION = 560
SEED_MAPE = 66

# Stream tags: each random operation draws from SeedSequence([seed, tag]).
TAG_PREDICTORS = 1
TAG_EVENTS = 2
TAG_CENSORING = 3
TAG_RESAMPLE = 4
TAG_MAPE = 5

DEFAULT_LEVEL = 0.95
DEFAULT_MAPE_DRAWS = 1000
DEFAULT_TOLERANCE_RISK = 0.005
DEFAULT_TOLERANCE_C = 0.005
DEFAULT_MAX_ITERATIONS = 200

CALIBRATION_MIN_ROWS = 5000
CALIBRATION_SIMULATION_ROWS = 10000

MIN_RECIPROCAL_CONDITION = 1e-10
INFORMATION_CHUNK_ROWS = 65536

NEWTON_MAX_ITERATIONS = 100
NEWTON_TOLERANCE = 1e-8

# Largest standard error (log-rate scale) explored when converting an
# interval width into a variance target.
MAX_LOG_RATE_SE = 10.0
MAX_SAMPLE_SIZE = 10 ** 9

UNRELIABLE_RISK_SE = 0.25
FAIRNESS_FACTOR = 1.5
LOWESS_BANDWIDTH = 0.5
LOWESS_MIN_POINTS = 5
BINDING_INDIVIDUALS = 10

SVG_HASH_SALT = 'fairsurv'
