"""Input validation helpers used by the estimator classes and core ops."""

from __future__ import annotations

import numpy as np


def as_float_matrix(x, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting non-finite entries."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_count_matrix(x, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 matrix of non-negative counts."""
    arr = as_float_matrix(x, name)
    if np.any(arr < 0):
        raise ValueError(f"{name} contains negative counts")
    return arr


def as_float_vector(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_length(x: np.ndarray, expected: int, name: str) -> np.ndarray:
    if x.shape[0] != expected:
        raise ValueError(f"{name} has length {x.shape[0]}, expected {expected}")
    return x


def check_fitted(estimator, attribute: str) -> None:
    """Raise if `estimator` has not been fitted (sklearn convention)."""
    if getattr(estimator, attribute, None) is None:
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
