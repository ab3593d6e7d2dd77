"""Input validation helpers shared by the kernel, backbone and metric layers."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError


def as_chw(x, name: str = "tensor") -> np.ndarray:
    """Coerce ``x`` to a C-contiguous float32 (channels, height, width) array.

    Raises
    ------
    DimensionError
        If ``x`` is not rank-3 or has a zero-sized axis.
    """
    arr = np.asarray(x)
    if arr.ndim != 3:
        raise DimensionError(f"{name} must be rank-3 (C, H, W), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise DimensionError(f"{name} has a zero-sized axis: shape {arr.shape}")
    return np.ascontiguousarray(arr, dtype=np.float32)


def check_same_shape(a: np.ndarray, b: np.ndarray, context: str = "inputs") -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{context}: shape mismatch {a.shape} vs {b.shape}")


def check_finite(x: np.ndarray, name: str = "tensor") -> None:
    if not np.isfinite(x).all():
        raise DimensionError(f"{name} contains non-finite values")


def as_1d_float(x, name: str = "array") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size == 0:
        raise DimensionError(f"{name} is empty")
    return arr


def check_equal_length(x: np.ndarray, y: np.ndarray, min_n: int = 1) -> None:
    if len(x) != len(y):
        raise DimensionError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < min_n:
        raise DimensionError(f"need at least {min_n} samples, got {len(x)}")
