import os
from pathlib import Path

from joblib import cpu_count

REPO_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO_ROOT / 'configs'
RESULTS_DIR = REPO_ROOT / 'results'
TENSORBOARD_DIR = REPO_ROOT / 'tensorboard'

# The dispersion exponent is fixed for the whole package.
ALPHA = 0.5

# Lower end of the u-integral when no truncation is requested.
U_FLOOR = 1e-12

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_BLOW_UP_SUSPECTED = 2
EXIT_CONFIG_ERROR = 64


def worker_count() -> int:
    """Number of joblib workers, capped by the THREADS environment variable."""
    threads = os.environ.get('THREADS')
    if threads is None or threads.strip() == '':
        return cpu_count()
    try:
        n = int(threads)
    except ValueError:
        raise ValueError(f"THREADS must be an integer, got {threads!r}")
    return max(1, min(n, cpu_count()))
