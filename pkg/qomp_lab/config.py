import os

from dotenv import load_dotenv

load_dotenv()

DEFAULT_THREADS = 1
DEFAULT_LOG_LEVEL = "WARNING"


def get_threads() -> int:
    """Parallelism cap for sweeps, read from QOMP_LAB_THREADS."""
    raw = os.getenv("QOMP_LAB_THREADS")
    if not raw:
        return DEFAULT_THREADS
    try:
        return max(1, int(raw))
    except ValueError:
        return DEFAULT_THREADS


def get_log_level() -> str:
    return os.getenv("QOMP_LAB_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper()
