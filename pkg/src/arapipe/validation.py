"""Small input-validation helpers shared by the estimators."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import ConfigError


def as_text_list(X) -> list[str]:
    """Coerce an iterable of strings (list, tuple, 1-d object array) to a list.

    Rejects scalars and non-string elements with a clear message instead of
    letting a bare string iterate into characters.
    """
    if isinstance(X, str):
        raise ConfigError("expected an iterable of strings, got a single string")
    if isinstance(X, np.ndarray):
        if X.ndim != 1:
            raise ConfigError(f"expected a 1-d array of strings, got shape {X.shape}")
        X = X.tolist()
    if not isinstance(X, Iterable):
        raise ConfigError(f"expected an iterable of strings, got {type(X).__name__}")
    out = list(X)
    for i, item in enumerate(out):
        if not isinstance(item, str):
            raise ConfigError(f"element {i} is not a string: {type(item).__name__}")
    return out


def check_array_2d(X, name: str = "X") -> np.ndarray:
    """Validate a finite 2-d float array."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ConfigError(f"{name} must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite values")
    return arr


def check_positive(value: float, name: str) -> None:
    if not value > 0:
        raise ConfigError(f"{name} must be positive, got {value!r}")
