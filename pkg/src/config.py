"""
Configuration and logging setup for cascade-bandits.

- Loads environment variables from the .env file.
- Configures logging to both file and console.
- Defines the Config class for global constants and numerical defaults.
"""

import logging
import os
import sys
from dotenv import load_dotenv

# Load environment variables from .env file in project root
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
load_dotenv(os.path.join(project_root, '.env'))


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name, "").strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        return default


class Config:
    """
    Global configuration constants for simulations, kernels and the harness.
    """
    THREADS = max(1, _env_int("CASCADE_BANDITS_THREADS", 1))
    LOG_LEVEL = os.environ.get("CASCADE_BANDITS_LOG_LEVEL", "INFO").upper()
    LOG_FILE = os.environ.get("CASCADE_BANDITS_LOG_FILE", os.path.join(project_root, "cascade_bandits.log"))

    CHECKPOINTS = 100
    KLUCB_TOL = 1e-9
    KLUCB_MAX_ITER = 200
    SVD_TOL = 1e-10
    SVD_MAX_ITER = 1000
    SVD_OVERSAMPLE = 10
    GRAM_REFRESH = 1024
    MINIMAX_GRID = 10_000
    LINUCB_SIGMA = 0.1
    LINUCB_DELTA = 0.01
    LINTS_SIGMA = 0.1
    LINTS_LAMBDA_PRESETS = (0.04, 0.08)
    SVG_SIG_DIGITS = 6
    ERROR_BAR_SCALE = 1.0
    DEFAULT_RUNS = 20
    FEATURE_DIM = 2
    TRAINING_ROWS = 200
    SYNTHETIC_WEIGHTS = (0.2, 0.1, 0.05)
    VALID_POLICIES = [
        "ts-cascade",
        "cts",
        "cascade-ucb1",
        "cascade-klucb",
        "lints-cascade",
        "cascade-linucb",
        "cascade-lints",
        "oracle",
    ]
    LINEAR_POLICIES = ["lints-cascade", "cascade-linucb", "cascade-lints"]


def threads() -> int:
    """Pool size, re-read from the environment so tests and the CLI can override it late."""
    return max(1, _env_int("CASCADE_BANDITS_THREADS", Config.THREADS))


_handlers = [logging.StreamHandler(sys.stderr)]
if Config.LOG_FILE:
    _handlers.append(logging.FileHandler(Config.LOG_FILE, mode='a', encoding='utf-8'))

logging.basicConfig(
    level=getattr(logging, Config.LOG_LEVEL, logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=_handlers
)
logger = logging.getLogger("cascade-bandits")
