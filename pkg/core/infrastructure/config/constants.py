"""Application-wide constants"""

# Default paths - these can be overridden by user settings
DEFAULT_PATHS = {
    'cache': 'cache',
    'plans': 'cache/plans',
    'reports': 'reports',
    'logs': 'logs',
    'config': 'config',
}

# Application settings
APP_NAME = "cross-kernels"
APP_VERSION = "1.0.0"

# Environment variables
ENV_HOME = 'CROSS_KERNELS_HOME'
ENV_THREADS = 'CROSS_KERNELS_THREADS'
ENV_LOG_LEVEL = 'CROSS_KERNELS_LOG_LEVEL'

# Arithmetic defaults
DEFAULT_BP = 8
DEFAULT_LOG2Q = 28
DEFAULT_STRATEGY = 'barrett64'
MXU_DIM = 128

# name -> (N, log2q, L, dnum, batch); L_aux = ceil(L / dnum)
PARAM_SETS = {
    'A': (1 << 12, 28, 4, 1, 32),
    'B': (1 << 13, 28, 8, 1, 16),
    'C': (1 << 14, 28, 15, 1, 16),
    'D': (1 << 16, 28, 51, 3, 8),
}

REPORT_FORMATS = ('csv', 'json')

# Seeded input streams
PRNG_ID = 'philox4x64-10'
DEFAULT_SEED = 0x5EED

# Exit codes
EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2

__all__ = [
    'DEFAULT_PATHS',
    'APP_NAME',
    'APP_VERSION',
    'ENV_HOME',
    'ENV_THREADS',
    'ENV_LOG_LEVEL',
    'DEFAULT_BP',
    'DEFAULT_LOG2Q',
    'DEFAULT_STRATEGY',
    'MXU_DIM',
    'PARAM_SETS',
    'REPORT_FORMATS',
    'PRNG_ID',
    'DEFAULT_SEED',
    'EXIT_OK',
    'EXIT_VERIFY_FAILED',
    'EXIT_USAGE',
]
