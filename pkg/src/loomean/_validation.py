"""Input validation helpers used across the estimators."""
from __future__ import annotations

import numpy as np


def as_sample(x, min_rows: int = 1) -> np.ndarray:
    """Coerce to a float (n, d) matrix of finite values.

    One-dimensional input is treated as a single column.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, np.newaxis]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d sample matrix, got ndim={arr.ndim}")
    if arr.shape[0] < min_rows:
        raise ValueError(f"need at least {min_rows} sample points, got {arr.shape[0]}")
    if arr.shape[1] < 1:
        raise ValueError("sample must have at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise ValueError("sample contains non-finite values")
    return arr


def as_response(y, n_samples: int) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != n_samples:
        raise ValueError(f"response must be a length-{n_samples} vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("response contains non-finite values")
    return arr


def check_bandwidth(h) -> float:
    h = float(h)
    if not np.isfinite(h) or h <= 0.0:
        raise ValueError("bandwidth must be a positive finite number")
    return h


def check_not_degenerate(x: np.ndarray) -> None:
    """Reject samples whose rows are all identical."""
    if x.shape[0] >= 2 and np.all(x == x[0]):
        raise ValueError("degenerate sample: all points are identical")
