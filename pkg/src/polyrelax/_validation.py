"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_points(X, n_features=None, name="X"):
    """2-D float array of finite points, optionally with a fixed column count."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1) if n_features in (None, 1) else X.reshape(1, -1)
    X = check_array(X, dtype=np.float64, ensure_all_finite=True, input_name=name)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"{name} has {X.shape[1]} features, expected {n_features}")
    return X


def check_values(y, n_samples, name="y"):
    y = check_array(np.asarray(y, dtype=float).reshape(-1, 1), dtype=np.float64,
                    ensure_all_finite=True, input_name=name).ravel()
    if y.shape[0] != n_samples:
        raise ValueError(f"{name} has {y.shape[0]} entries, expected {n_samples}")
    return y


def check_queries(X, d):
    """Stack of matrices ``(N, d, d)`` or rows of signed singular values ``(N, d)``.

    As usual for estimators a 2-D array is read as samples by features, so a
    single matrix has to be passed as ``F[None]``; a 1-D array is one ``nu``.
    """
    X = np.asarray(X, dtype=float)
    if X.shape == (d,):
        X = X[None]
    if X.ndim == 3 and X.shape[1:] == (d, d):
        if not np.all(np.isfinite(X)):
            raise ValueError("query matrices must be finite")
        return X
    if X.ndim == 2 and X.shape[1] == d:
        return check_array(X, dtype=np.float64, ensure_all_finite=True)
    raise ValueError(f"queries must have shape (N, {d}) or (N, {d}, {d}), got {X.shape}")


def check_positive(value, name):
    value = float(value)
    if not value > 0 or not np.isfinite(value):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value
