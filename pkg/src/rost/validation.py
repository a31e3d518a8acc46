"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

import numpy as np


def check_token_array(X, vocab_size=None) -> np.ndarray:
    """Coerce token records to an (n, 4) integer array with columns t, x, y, word.

    Fractional coordinates are floored; t and word must be integral.
    """
    arr = np.asarray(X)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError(
            f"token records must form an (n, 4) array of t, x, y, word; got shape {arr.shape}"
        )
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)):
            raise ValueError("token records contain non-finite values")
        if np.any(arr[:, 0] != np.floor(arr[:, 0])) or np.any(arr[:, 3] != np.floor(arr[:, 3])):
            raise ValueError("t and word columns must be integral")
        arr = np.floor(arr)
    elif arr.dtype.kind not in "iu":
        raise ValueError(f"token records must be numeric, got dtype {arr.dtype}")
    out = arr.astype(np.int64)
    if out.size:
        if np.any(out[:, 0] < 0):
            raise ValueError("timesteps must be non-negative")
        if np.any(out[:, 3] < 0):
            raise ValueError("word indices must be non-negative")
        if vocab_size is not None and np.any(out[:, 3] >= vocab_size):
            bad = int(out[out[:, 3] >= vocab_size][0, 3])
            raise ValueError(f"word index {bad} out of range [0, {vocab_size})")
    return out


def check_positive(name: str, value, strict: bool = True):
    if value is None or (value <= 0 if strict else value < 0):
        bound = "positive" if strict else "non-negative"
        raise ValueError(f"{name} must be {bound}, got {value}")
    return value
