"""
Utility functions for cascade-bandits.

- Defines the domain error hierarchy.
- Provides top-K selection with the lowest-index tie-break.
- Derives reproducible per-run random streams.
- Reads and writes JSON artifacts deterministically.
"""

import json
import os
from typing import Any, Dict

import numpy as np

from config import logger


class CascadeBanditError(ValueError):
    """Base class for every domain error raised by the package."""


class StructuralError(CascadeBanditError):
    """Invalid lists, indices, shapes or parameter ranges."""


class NumericError(CascadeBanditError):
    """Non-convergence or a broken numerical invariant."""


class ConfigError(CascadeBanditError):
    """Unresolvable or inconsistent experiment configuration."""


def fail(error_cls, message: str):
    """Log an error message and raise it as the given domain error."""
    logger.error(message)
    raise error_cls(message)


def top_k(scores: np.ndarray, K: int) -> np.ndarray:
    """
    Indices of the K largest scores, descending.
    Ties go to the lowest index (stable sort on the negated scores).
    """
    return np.argsort(-np.asarray(scores, dtype=float), kind="stable")[:K]


CELL_STREAM = 0
TRAINING_STREAM = 1
DIAGNOSTIC_STREAM = 2


def run_stream(base_seed: int, *keys: int, purpose: int = CELL_STREAM) -> np.random.Generator:
    """
    Counter-based stream for one simulation cell, training draw or diagnostic.
    (purpose, number of keys, base_seed, *keys) is mixed by SeedSequence into a
    Philox key. The entropy list has a fixed layout per purpose and arity, so
    zero padding never maps two different key tuples onto the same stream.
    """
    entropy = [int(purpose), len(keys), int(base_seed), *[int(k) for k in keys]]
    seq = np.random.SeedSequence(entropy)
    return np.random.Generator(np.random.Philox(seq))


def load_json(path: str) -> Dict[str, Any]:
    """
    Load a JSON document from disk.
    Raises StructuralError if the file is missing or not valid JSON.
    """
    if not os.path.exists(path):
        fail(StructuralError, f"File not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        fail(StructuralError, f"Invalid JSON in {path}: {e}")


def dump_json(data: Any, path: str) -> str:
    """Write JSON with sorted keys so repeated runs are byte-identical."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


_SUPERSCRIPTS = str.maketrans("-0123456789", "⁻⁰¹²³⁴⁵⁶⁷⁸⁹")


def format_sci(value: float, digits: int = 2) -> str:
    """Scientific notation in the report style, e.g. 2.60×10⁴."""
    mantissa, exponent = f"{float(value):.{digits}e}".split("e")
    return f"{mantissa}×10{str(int(exponent)).translate(_SUPERSCRIPTS)}"
