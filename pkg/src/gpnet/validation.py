"""Input validation helpers.

Small checkers that normalize user input into the arrays the numerical code
expects, raising :class:`~gpnet.errors.UsageError` or
:class:`~gpnet.errors.DataError` with a readable message instead of letting
shape errors surface deep inside a kernel.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError, UsageError


def as_feature_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a C-contiguous float64 2-D array with finite entries."""
    arr = np.ascontiguousarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise UsageError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite entries", code="non-finite")
    return arr


def as_edge_array(edges, n: int) -> np.ndarray:
    """Coerce an edge list to an (E, 2) int64 array and range-check ids."""
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise UsageError(f"edges must have shape (E, 2), got {arr.shape}")
    if arr.min() < 0 or arr.max() >= n:
        raise DataError(
            f"edge endpoint out of range [0, {n}): min={arr.min()}, max={arr.max()}",
            code="index-out-of-range",
        )
    return arr


def as_label_vector(labels, n: int, num_classes: int | None = None) -> np.ndarray:
    arr = np.asarray(labels, dtype=np.int64)
    if arr.shape != (n,):
        raise DataError(f"labels must have shape ({n},), got {arr.shape}", code="count-mismatch")
    if arr.size and arr.min() < 0:
        raise DataError("labels must be non-negative", code="index-out-of-range")
    if num_classes is not None and arr.size and arr.max() >= num_classes:
        raise DataError(
            f"label {arr.max()} out of range for {num_classes} classes",
            code="index-out-of-range",
        )
    return arr


def as_index_mask(mask, n: int, name: str = "mask") -> np.ndarray:
    """Accept a boolean mask or an index list; return a boolean mask."""
    arr = np.asarray(mask)
    if arr.dtype == bool:
        if arr.shape != (n,):
            raise UsageError(f"{name} must have length {n}, got {arr.shape}")
        return arr
    arr = arr.astype(np.int64, casting="safe") if arr.dtype.kind in "iu" else None
    if arr is None:
        raise UsageError(f"{name} must be a boolean mask or integer indices")
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise DataError(f"{name} index out of range [0, {n})", code="index-out-of-range")
    out = np.zeros(n, dtype=bool)
    out[arr] = True
    return out


def check_square(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise UsageError(f"{name} must be square, got shape {M.shape}")
    return M
