"""Small input-validation helpers used by the estimator-facing APIs."""

from __future__ import annotations

import numpy as np


def as_feature_matrix(X, n_features: int | None = None) -> np.ndarray:
    """Coerce ``X`` to a 2-D float64 array, optionally enforcing arity."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got ndim={arr.ndim}")
    if n_features is not None and arr.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("feature matrix contains non-finite values")
    return arr


def as_label_vector(y, n_classes: int | None = None) -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D label vector, got ndim={arr.ndim}")
    arr = arr.astype(np.int64)
    if arr.size and arr.min() < 0:
        raise ValueError("labels must be nonnegative integers")
    if n_classes is not None and arr.size and arr.max() >= n_classes:
        raise ValueError(f"label {arr.max()} out of range for {n_classes} classes")
    return arr


def check_row(x, n_features: int) -> np.ndarray:
    """Validate one observation's feature vector."""
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.shape[0] != n_features:
        raise ValueError(f"expected {n_features} features, got {arr.shape[0]}")
    return arr


def check_label(y, n_classes: int) -> int:
    label = int(y)
    if not 0 <= label < n_classes:
        raise ValueError(f"label {label} out of range for {n_classes} classes")
    return label
