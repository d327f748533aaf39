"""Rating data, factor models and the prediction rule shared by all solvers."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, NamedTuple

import numpy as np
import scipy.sparse as sp


class RatingTriple(NamedTuple):
    user: int
    item: int
    rating: float


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class RatingDataset:
    """Sparse collection of known ratings over an ``M x N`` user/item grid.

    Ratings are stored as three parallel arrays in dataset order. Per-user and
    per-item adjacency indexes are built lazily on first access.

    Parameters
    ----------
    users, items : array-like of int
        0-based user and item indices.
    ratings : array-like of float
        Raw rating values.
    num_users, num_items : int, optional
        Grid dimensions. Default to ``max index + 1``.
    """

    def __init__(self, users, items, ratings, num_users=None, num_items=None):
        users = np.asarray(users, dtype=np.int64).ravel().copy()
        items = np.asarray(items, dtype=np.int64).ravel().copy()
        ratings = np.asarray(ratings, dtype=np.float64).ravel().copy()
        if not (len(users) == len(items) == len(ratings)):
            raise ValueError("users, items and ratings must have equal length")
        if len(ratings) == 0:
            raise ValueError("a rating dataset needs at least one known rating")
        if num_users is None:
            num_users = int(users.max()) + 1
        if num_items is None:
            num_items = int(items.max()) + 1
        num_users, num_items = int(num_users), int(num_items)
        if num_users < 1 or num_items < 1:
            raise ValueError("num_users and num_items must be positive")
        if users.min() < 0 or users.max() >= num_users:
            raise IndexError(f"user index outside [0, {num_users})")
        if items.min() < 0 or items.max() >= num_items:
            raise IndexError(f"item index outside [0, {num_items})")
        if not np.all(np.isfinite(ratings)):
            raise ValueError("ratings must be finite")
        keys = users * num_items + items
        if np.unique(keys).size != keys.size:
            raise ValueError("duplicate (user, item) pair in known ratings")

        self.users = _frozen(users)
        self.items = _frozen(items)
        self.ratings = _frozen(ratings)
        self.num_users = num_users
        self.num_items = num_items

    @classmethod
    def from_triples(cls, triples, num_users=None, num_items=None) -> RatingDataset:
        triples = list(triples)
        if not triples:
            raise ValueError("a rating dataset needs at least one known rating")
        u, i, r = zip(*triples)
        return cls(u, i, r, num_users, num_items)

    def __len__(self) -> int:
        return len(self.ratings)

    def __iter__(self) -> Iterator[RatingTriple]:
        for u, i, r in zip(self.users.tolist(), self.items.tolist(), self.ratings.tolist()):
            yield RatingTriple(u, i, r)

    def __repr__(self) -> str:
        return (
            f"RatingDataset(num_users={self.num_users}, num_items={self.num_items}, "
            f"n_ratings={len(self)})"
        )

    @property
    def shape(self) -> tuple[int, int]:
        return self.num_users, self.num_items

    def mean(self) -> float:
        return float(np.mean(self.ratings))

    def subset(self, index) -> RatingDataset:
        """Dataset restricted to the given positions, keeping ``M`` and ``N``."""
        index = np.asarray(index)
        return RatingDataset(
            self.users[index], self.items[index], self.ratings[index],
            self.num_users, self.num_items,
        )

    @cached_property
    def by_user(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, order)`` such that ``order[indptr[m]:indptr[m+1]]`` lists user m's ratings."""
        return _adjacency(self.users, self.num_users)

    @cached_property
    def by_item(self) -> tuple[np.ndarray, np.ndarray]:
        return _adjacency(self.items, self.num_items)

    def to_csr(self) -> sp.csr_matrix:
        """Ratings as an ``M x N`` CSR matrix (unknown entries are structural zeros)."""
        return sp.csr_matrix(
            (self.ratings, (self.users, self.items)), shape=self.shape
        )


def _adjacency(index: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(index, kind="stable")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(index, minlength=n), out=indptr[1:])
    return _frozen(indptr), _frozen(order)


@dataclass
class FactorModel:
    """User and item factors stacked into one ``(M + N) x K`` matrix.

    Row ``m < M`` is the user vector of user ``m``; row ``M + n`` is the item
    vector of item ``n``.
    """

    num_users: int
    num_items: int
    stacked: np.ndarray

    def __post_init__(self):
        self.stacked = np.asarray(self.stacked, dtype=np.float64)
        if self.stacked.ndim != 2 or self.stacked.shape[0] != self.num_users + self.num_items:
            raise ValueError(
                f"stacked matrix must have {self.num_users + self.num_items} rows, "
                f"got shape {self.stacked.shape}"
            )
        if self.stacked.shape[1] < 1:
            raise ValueError("rank must be positive")

    @property
    def rank(self) -> int:
        return self.stacked.shape[1]

    @property
    def user_factors(self) -> np.ndarray:
        return self.stacked[: self.num_users]

    @property
    def item_factors(self) -> np.ndarray:
        return self.stacked[self.num_users :]

    def copy(self) -> FactorModel:
        return FactorModel(self.num_users, self.num_items, self.stacked.copy())

    def predict_many(self, users, items) -> np.ndarray:
        users = _check_index(users, self.num_users, "user")
        items = _check_index(items, self.num_items, "item")
        return np.einsum(
            "ij,ij->i", self.stacked[users], self.stacked[self.num_users + items]
        )

    def dense(self) -> np.ndarray:
        """Full ``M x N`` prediction matrix; only sensible for small grids."""
        return self.user_factors @ self.item_factors.T


@dataclass
class BiasedFactorModel:
    """Factor model plus global mean and user/item bias terms."""

    base: FactorModel
    mu: float
    user_bias: np.ndarray
    item_bias: np.ndarray

    def __post_init__(self):
        self.user_bias = np.asarray(self.user_bias, dtype=np.float64)
        self.item_bias = np.asarray(self.item_bias, dtype=np.float64)
        if self.user_bias.shape != (self.base.num_users,):
            raise ValueError("user_bias length must equal num_users")
        if self.item_bias.shape != (self.base.num_items,):
            raise ValueError("item_bias length must equal num_items")

    @property
    def num_users(self) -> int:
        return self.base.num_users

    @property
    def num_items(self) -> int:
        return self.base.num_items

    @property
    def rank(self) -> int:
        return self.base.rank

    def copy(self) -> BiasedFactorModel:
        return BiasedFactorModel(
            self.base.copy(), self.mu, self.user_bias.copy(), self.item_bias.copy()
        )

    def predict_many(self, users, items) -> np.ndarray:
        users = _check_index(users, self.num_users, "user")
        items = _check_index(items, self.num_items, "item")
        return (
            self.mu
            + self.user_bias[users]
            + self.item_bias[items]
            + self.base.predict_many(users, items)
        )


@dataclass
class SolverReport:
    """What a training run did.

    ``trace`` holds the objective after each iteration (best-so-far train RMSE
    for annealing, train RMSE per epoch for SGD, the penalized objective per
    half-sweep for ALS, squared error per round for WNMF).
    """

    solver: str
    trace: list[float] = field(default_factory=list)
    iterations: int = 0
    train_rmse: float = float("nan")
    test_rmse: float | None = None
    wall_time: float = 0.0
    rng_algorithm: str = ""
    extra: dict = field(default_factory=dict)


class _Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        self.elapsed = 0.0
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def _check_index(idx, n: int, what: str) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"{what} index outside [0, {n})")
    return idx


def predict(model: FactorModel, user: int, item: int) -> float:
    """Dot product of the user's row and the item's row of the stacked matrix."""
    if not 0 <= user < model.num_users:
        raise IndexError(f"user {user} outside [0, {model.num_users})")
    if not 0 <= item < model.num_items:
        raise IndexError(f"item {item} outside [0, {model.num_items})")
    return float(model.stacked[user] @ model.stacked[model.num_users + item])


def predict_biased(model: BiasedFactorModel, user: int, item: int) -> float:
    dot = predict(model.base, user, item)
    return float(model.mu + model.user_bias[user] + model.item_bias[item] + dot)


def init_model(num_users, num_items, rank, seed=None, lower=0.0, upper=1.0) -> FactorModel:
    """Factor model with i.i.d. ``Uniform[lower, upper)`` entries.

    ``seed`` may be an int, a ``SeedSequence`` or a ``numpy.random.Generator``.
    """
    if min(num_users, num_items, rank) < 1:
        raise ValueError("num_users, num_items and rank must all be >= 1")
    if not lower < upper:
        raise ValueError(f"lower ({lower}) must be below upper ({upper})")
    rng = np.random.default_rng(seed)
    stacked = rng.uniform(lower, upper, size=(num_users + num_items, rank))
    return FactorModel(num_users, num_items, stacked)


def mean_matched_bounds(mean: float, rank: int, spread: float = 0.1) -> tuple[float, float]:
    """Uniform bounds whose entries have expectation ``sqrt(mean / rank)``.

    With independent entries the expected dot product of two such rows is
    ``mean``, so every prediction starts near the global mean regardless of
    rank. ``spread`` is the relative half-width of the interval.
    """
    if mean <= 0:
        raise ValueError("mean-matched initialization needs a positive rating mean")
    if not 0 < spread < 1:
        raise ValueError("spread must be in (0, 1)")
    centre = np.sqrt(mean / rank)
    return float(centre * (1 - spread)), float(centre * (1 + spread))


def clamp_ratings(predictions, low: float = 1.0, high: float = 5.0) -> np.ndarray:
    """Clip predictions to the rating scale. Off by default everywhere."""
    return np.clip(np.asarray(predictions, dtype=np.float64), low, high)
