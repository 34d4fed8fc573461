"""
Input Validators for the Dispatching Engine
Validates arguments and files before they reach the algorithms
"""

from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from src.errors import ConfigError


def check_file(path: Optional[Union[str, Path]], what: str) -> Path:
    if path is None or str(path).strip() == "":
        raise ConfigError(f"No {what} path configured")
    resolved = Path(path)
    if not resolved.is_file():
        raise FileNotFoundError(f"{what} file not found: {resolved}")
    return resolved


def check_center_count(k: int, n_vertices: int):
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k > n_vertices:
        raise ValueError(f"k={k} exceeds the number of vertices ({n_vertices})")


def check_gap_vector(gaps: Sequence[float], n_vertices: int) -> np.ndarray:
    values = np.asarray(gaps, dtype=float).reshape(-1)
    if values.shape[0] != n_vertices:
        raise ValueError(f"Expected {n_vertices} gap values, got {values.shape[0]}")
    if not np.all(np.isfinite(values)):
        raise ValueError("Gap values must be finite")
    return values

