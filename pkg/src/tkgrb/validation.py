"""Input checks shared by the estimator and the dataset helpers."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_quadruples(X, name: str = "X", num_entities: int | None = None, num_rels: int | None = None):
    """Return ``X`` as a contiguous ``(n, 4)`` int64 array of ``s, r, o, t`` rows."""
    X = check_array(X, dtype=None, ensure_2d=True, ensure_min_samples=0, input_name=name)
    if X.shape[1] not in (4, 5):
        raise ValueError(f"{name} must have 4 columns (s, r, o, t), got {X.shape[1]}")
    X = X[:, :4]
    if not np.issubdtype(X.dtype, np.integer):
        as_int = X.astype(np.int64)
        if not np.array_equal(as_int, X):
            raise ValueError(f"{name} must contain integer ids and timesteps")
        X = as_int
    X = np.ascontiguousarray(X, dtype=np.int64)
    if len(X) and X.min() < 0:
        raise ValueError(f"{name} contains negative ids or timesteps")
    if num_entities is not None and len(X) and max(X[:, 0].max(), X[:, 2].max()) >= num_entities:
        raise ValueError(f"{name} has entity ids >= num_entities={num_entities}")
    if num_rels is not None and len(X) and X[:, 1].max() >= num_rels:
        raise ValueError(f"{name} has relation ids >= num_rels={num_rels}")
    return X


def check_time_order(*splits, names=("train", "valid", "test")) -> None:
    """Each split must start strictly after the previous non-empty one ends."""
    prev_name, prev_max = None, None
    for name, X in zip(names, splits):
        if X is None or not len(X):
            continue
        lo = int(X[:, 3].min())
        if prev_max is not None and lo <= prev_max:
            raise ValueError(f"{name} starts at t={lo}, not after {prev_name} ends at t={prev_max}")
        prev_name, prev_max = name, int(X[:, 3].max())
