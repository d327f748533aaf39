"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array, check_consistent_length, column_or_1d

from .core import RatingDataset


def check_index_pairs(X) -> np.ndarray:
    """Validate an ``(n, 2)`` array of ``(user, item)`` indices and return it as int64."""
    X = check_array(X, dtype=None, ensure_2d=True, ensure_all_finite=True)
    if X.shape[1] != 2:
        raise ValueError(f"expected (user, item) pairs with 2 columns, got {X.shape[1]}")
    if X.dtype.kind == "f":
        if not np.all(X == np.round(X)):
            raise ValueError("user and item indices must be integers")
    elif X.dtype.kind not in "iu":
        raise ValueError(f"user and item indices must be integers, got dtype {X.dtype}")
    X = X.astype(np.int64)
    if X.size and X.min() < 0:
        raise IndexError("user and item indices must be non-negative")
    return X


def check_ratings(X, y=None, n_users=None, n_items=None) -> RatingDataset:
    """Turn estimator inputs into a :class:`RatingDataset`.

    ``X`` is either a ready dataset (``y`` must then be None) or an ``(n, 2)``
    index array with ratings ``y``.
    """
    if isinstance(X, RatingDataset):
        if y is not None:
            raise ValueError("pass ratings either inside the dataset or as y, not both")
        if n_users is not None or n_items is not None:
            return RatingDataset(
                X.users, X.items, X.ratings,
                n_users or X.num_users, n_items or X.num_items,
            )
        return X
    if y is None:
        raise ValueError("ratings y are required when X is an index array")
    X = check_index_pairs(X)
    y = column_or_1d(y, warn=True).astype(np.float64)
    check_consistent_length(X, y)
    for name, val in (("n_users", n_users), ("n_items", n_items)):
        if val is not None and not (isinstance(val, numbers.Integral) and val > 0):
            raise ValueError(f"{name} must be a positive integer or None, got {val!r}")
    return RatingDataset(X[:, 0], X[:, 1], y, n_users, n_items)


def check_seed(random_state) -> int | None:
    if random_state is None:
        return None
    if isinstance(random_state, numbers.Integral) and random_state >= 0:
        return int(random_state)
    raise ValueError(
        f"random_state must be a non-negative int or None, got {random_state!r}"
    )
