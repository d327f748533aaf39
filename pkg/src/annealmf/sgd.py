"""Biased matrix factorization trained by stochastic gradient descent."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import (
    BiasedFactorModel,
    RatingDataset,
    RatingTriple,
    SolverReport,
    _Stopwatch,
    init_model,
)
from .evaluation import rmse
from .sampling import RNG_ALGORITHM, STREAM_INIT, STREAM_SHUFFLE, make_rng


class DivergenceError(FloatingPointError):
    """The prediction error became non-finite during training."""


@dataclass(frozen=True)
class SgdConfig:
    """SGD hyperparameters.

    ``update="simultaneous"`` applies all four updates from pre-update values
    (a true gradient step on the per-rating loss); ``"sequential"`` updates the
    item vector with the freshly updated user vector.
    """

    learning_rate: float = 0.005
    regularization: float = 0.02
    epochs: int = 30
    rank: int = 20
    seed: int | None = None
    shuffle: bool = True
    update: str = "simultaneous"
    init_bounds: tuple[float, float] = (0.0, 0.1)

    def __post_init__(self):
        if not (self.learning_rate >= 0 and math.isfinite(self.learning_rate)):
            raise ValueError(f"learning_rate must be finite and >= 0, got {self.learning_rate}")
        if not (self.regularization >= 0 and math.isfinite(self.regularization)):
            raise ValueError(f"regularization must be finite and >= 0, got {self.regularization}")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.update not in ("simultaneous", "sequential"):
            raise ValueError(f"update must be 'simultaneous' or 'sequential', got {self.update!r}")

    def describe(self) -> dict:
        return {
            "lr": self.learning_rate, "reg": self.regularization, "epochs": self.epochs,
            "rank": self.rank, "seed": self.seed, "shuffle": self.shuffle,
            "update": self.update, "init_bounds": list(self.init_bounds),
        }


def sgd_step(model: BiasedFactorModel, triple: RatingTriple, cfg: SgdConfig) -> float:
    """Apply one SGD update for a single rating in place; return the pre-update error."""
    m, n, r = triple
    M = model.num_users
    if not (0 <= m < M and 0 <= n < model.num_items):
        raise IndexError(f"rating ({m}, {n}) outside the model grid")
    S = model.base.stacked
    u = S[m].copy()
    i = S[M + n].copy()
    bm, bn = model.user_bias[m], model.item_bias[n]
    e = r - model.mu - bm - bn - float(u @ i)
    if not math.isfinite(e):
        raise DivergenceError(f"non-finite error on rating (user={m}, item={n}, rating={r})")
    g, lam = cfg.learning_rate, cfg.regularization
    model.user_bias[m] = bm + g * (e - lam * bm)
    model.item_bias[n] = bn + g * (e - lam * bn)
    S[m] = u + g * (e * i - lam * u)
    if cfg.update == "sequential":
        S[M + n] = i + g * (e * S[m] - lam * i)
    else:
        S[M + n] = i + g * (e * u - lam * i)
    return e


@njit(cache=True)
def _sgd_epoch(S, bu, bi, mu, users, items, ratings, order, lr, reg, M, simultaneous):
    K = S.shape[1]
    for idx in order:
        m = users[idx]
        n = M + items[idx]
        dot = 0.0
        for k in range(K):
            dot += S[m, k] * S[n, k]
        e = ratings[idx] - mu - bu[m] - bi[items[idx]] - dot
        if not np.isfinite(e):
            return idx
        bm = bu[m]
        bn = bi[items[idx]]
        bu[m] = bm + lr * (e - reg * bm)
        bi[items[idx]] = bn + lr * (e - reg * bn)
        for k in range(K):
            uk = S[m, k]
            ik = S[n, k]
            S[m, k] = uk + lr * (e * ik - reg * uk)
            if simultaneous:
                S[n, k] = ik + lr * (e * uk - reg * ik)
            else:
                S[n, k] = ik + lr * (e * S[m, k] - reg * ik)
    return -1


def sgd_objective(model: BiasedFactorModel, train: RatingDataset, regularization: float) -> float:
    """Squared error over the known ratings plus the per-rating L2 penalty."""
    S = model.base.stacked
    u = S[train.users]
    i = S[model.num_users + train.items]
    bm = model.user_bias[train.users]
    bn = model.item_bias[train.items]
    e = train.ratings - model.mu - bm - bn - np.einsum("ij,ij->i", u, i)
    penalty = (u * u).sum(axis=1) + (i * i).sum(axis=1) + bm * bm + bn * bn
    return float(np.dot(e, e) + regularization * penalty.sum())


def init_biased_model(train: RatingDataset, cfg: SgdConfig) -> BiasedFactorModel:
    base = init_model(
        train.num_users, train.num_items, cfg.rank,
        make_rng(cfg.seed, STREAM_INIT), *cfg.init_bounds,
    )
    return BiasedFactorModel(
        base, train.mean(), np.zeros(train.num_users), np.zeros(train.num_items)
    )


def sgd_train(train: RatingDataset, cfg: SgdConfig) -> tuple[BiasedFactorModel, SolverReport]:
    """Run ``cfg.epochs`` passes of SGD over the training ratings."""
    if len(train) == 0:
        raise ValueError("empty training set")
    model = init_biased_model(train, cfg)
    report = SolverReport("sgd", rng_algorithm=RNG_ALGORITHM)
    shuffle_rng = make_rng(cfg.seed, STREAM_SHUFFLE)
    order = np.arange(len(train), dtype=np.int64)
    users = np.ascontiguousarray(train.users)
    items = np.ascontiguousarray(train.items)
    ratings = np.ascontiguousarray(train.ratings)

    with _Stopwatch() as clock:
        for _ in range(cfg.epochs):
            if cfg.shuffle:
                order = shuffle_rng.permutation(len(train))
            bad = _sgd_epoch(
                model.base.stacked, model.user_bias, model.item_bias, model.mu,
                users, items, ratings, order, cfg.learning_rate, cfg.regularization,
                train.num_users, cfg.update == "simultaneous",
            )
            if bad >= 0:
                raise DivergenceError(
                    f"non-finite error on rating (user={users[bad]}, item={items[bad]}, "
                    f"rating={ratings[bad]}) in epoch {report.iterations + 1}"
                )
            report.iterations += 1
            report.trace.append(rmse(model, train))

    report.train_rmse = rmse(model, train)
    report.wall_time = clock.elapsed
    return model, report
