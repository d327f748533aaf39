"""RMSE over known ratings and seeded holdout splitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RatingDataset
from .sampling import STREAM_SPLIT, make_rng


def _predict_fn(predictor):
    if hasattr(predictor, "predict_many"):
        return predictor.predict_many
    if callable(predictor):
        return predictor
    raise TypeError("predictor must be a factor model or a callable (users, items) -> ratings")


def rmse(predictor, ratings: RatingDataset) -> float:
    """Root mean squared error of ``predictor`` over the known ratings.

    ``predictor`` is a factor model or any callable mapping index arrays
    ``(users, items)`` to predictions. Summation runs in dataset order.
    """
    if len(ratings) == 0:
        raise ValueError("rmse needs at least one rating")
    pred = np.asarray(_predict_fn(predictor)(ratings.users, ratings.items), dtype=np.float64)
    err = ratings.ratings - pred
    return float(np.sqrt(np.dot(err, err) / len(ratings)))


def baseline_rmse(train: RatingDataset, test: RatingDataset) -> float:
    """Test RMSE of predicting the training mean everywhere."""
    mu = train.mean()
    return rmse(lambda u, i: np.full(len(u), mu), test)


@dataclass(frozen=True)
class Split:
    train: RatingDataset
    test: RatingDataset
    seed: int | None
    test_fraction: float

    def cold_start_count(self) -> int:
        """Test ratings whose user or item has no training rating."""
        seen_u = np.zeros(self.train.num_users, dtype=bool)
        seen_i = np.zeros(self.train.num_items, dtype=bool)
        seen_u[self.train.users] = True
        seen_i[self.train.items] = True
        cold = ~seen_u[self.test.users] | ~seen_i[self.test.items]
        return int(cold.sum())


def split_holdout(data: RatingDataset, test_fraction: float = 0.2, seed=None,
                  stratify: bool = False) -> Split:
    """Partition the known ratings into train and test.

    The default is a global uniform shuffle with
    ``round(test_fraction * len(data))`` test ratings. With ``stratify`` each
    user's ratings are split separately, so the test size is the sum of the
    per-user rounded counts instead.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(data)
    if n < 2:
        raise ValueError("need at least two ratings to split")
    rng = make_rng(seed, STREAM_SPLIT)

    if stratify:
        indptr, order = data.by_user
        test_idx = []
        for m in range(data.num_users):
            rows = np.array(order[indptr[m]:indptr[m + 1]])
            k = int(np.floor(test_fraction * len(rows) + 0.5))
            if k == 0 or k == len(rows):
                continue
            rng.shuffle(rows)
            test_idx.append(rows[:k])
        test_idx = np.concatenate(test_idx) if test_idx else np.empty(0, dtype=np.int64)
        if test_idx.size == 0:
            raise ValueError("stratified split left the test set empty")
        mask = np.zeros(n, dtype=bool)
        mask[test_idx] = True
    else:
        n_test = int(np.floor(test_fraction * n + 0.5))
        n_test = min(max(n_test, 1), n - 1)
        perm = rng.permutation(n)
        mask = np.zeros(n, dtype=bool)
        mask[perm[:n_test]] = True

    # keep dataset order within each half so summation order is reproducible
    return Split(
        train=data.subset(np.flatnonzero(~mask)),
        test=data.subset(np.flatnonzero(mask)),
        seed=seed,
        test_fraction=test_fraction,
    )
