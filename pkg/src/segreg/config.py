import os

from dotenv import load_dotenv

from .exceptions import ConfigError

load_dotenv()

DEFAULT_SOLVER_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 100_000
DEFAULT_DELTA = 0.25
DEFAULT_GAMMA_RATIO = 0.25

# grid fractions closer than this to an integer row are treated as on-grid
GRID_EPS = 1e-9

CSV_FLOAT_FORMAT = "%.17g"


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")
    if value < 1:
        raise ConfigError(f"{name} must be >= 1, got {value}")
    return value


def default_threads() -> int:
    return _env_int("SEGREG_THREADS", os.cpu_count() or 1)


LOG_LEVEL = os.environ.get("SEGREG_LOG_LEVEL", "WARNING").upper()
DEBUG = os.environ.get("SEGREG_DEBUG", "").lower() in ("1", "true", "yes", "on")
