"""Weighted nonnegative matrix factorization by multiplicative updates.

The 0/1 weight mask is implicit: every sum runs over the known ratings only,
so no dense ``M x N`` array is ever built.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FactorModel, RatingDataset, SolverReport, _Stopwatch, init_model
from .evaluation import rmse
from .sampling import RNG_ALGORITHM, STREAM_INIT, make_rng


@dataclass(frozen=True)
class WnmfConfig:
    iterations: int = 50
    rank: int = 20
    seed: int | None = None
    epsilon: float = 1e-12
    init_bounds: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.init_bounds[0] < 0:
            raise ValueError("WNMF needs a nonnegative initialization")

    def describe(self) -> dict:
        return {
            "iterations": self.iterations, "rank": self.rank, "seed": self.seed,
            "epsilon": self.epsilon, "init_bounds": list(self.init_bounds),
        }


def _scatter_rows(index: np.ndarray, values: np.ndarray, n_rows: int) -> np.ndarray:
    out = np.empty((n_rows, values.shape[1]))
    for k in range(values.shape[1]):
        out[:, k] = np.bincount(index, weights=values[:, k], minlength=n_rows)
    return out


def wnmf_update(model: FactorModel, train: RatingDataset, side: str,
                epsilon: float = 1e-12) -> None:
    """One multiplicative update of the user or item factors, in place.

    For users: ``U <- U * ((W*R) I^T) / ((W*(U I)) I^T)``, and symmetrically for
    items. The denominator is floored at ``epsilon``; rows with no known
    ratings are left unchanged.
    """
    S = model.stacked
    if np.any(S < 0):
        raise ValueError("WNMF update needs a nonnegative model")
    M = model.num_users
    U, V = S[:M], S[M:]
    pred = np.einsum("ij,ij->i", U[train.users], V[train.items])
    if side == "users":
        rows, other, target = train.users, V[train.items], U
    elif side == "items":
        rows, other, target = train.items, U[train.users], V
    else:
        raise ValueError(f"side must be 'users' or 'items', got {side!r}")
    n_rows = target.shape[0]
    num = _scatter_rows(rows, train.ratings[:, None] * other, n_rows)
    den = _scatter_rows(rows, pred[:, None] * other, n_rows)
    touched = np.bincount(rows, minlength=n_rows) > 0
    ratio = np.ones_like(target)
    ratio[touched] = num[touched] / np.maximum(den[touched], epsilon)
    target *= ratio


def wnmf_objective(model: FactorModel, train: RatingDataset) -> float:
    err = train.ratings - model.predict_many(train.users, train.items)
    return float(np.dot(err, err))


def wnmf_train(train: RatingDataset, cfg: WnmfConfig) -> tuple[FactorModel, SolverReport]:
    """Alternate user and item multiplicative updates for ``cfg.iterations`` rounds."""
    if len(train) == 0:
        raise ValueError("empty training set")
    if np.any(train.ratings < 0):
        raise ValueError("WNMF needs nonnegative ratings")
    model = init_model(
        train.num_users, train.num_items, cfg.rank,
        make_rng(cfg.seed, STREAM_INIT), *cfg.init_bounds,
    )
    report = SolverReport("wnmf", rng_algorithm=RNG_ALGORITHM)
    with _Stopwatch() as clock:
        for _ in range(cfg.iterations):
            wnmf_update(model, train, "users", cfg.epsilon)
            wnmf_update(model, train, "items", cfg.epsilon)
            report.trace.append(wnmf_objective(model, train))
            report.iterations += 1
    report.train_rmse = rmse(model, train)
    report.wall_time = clock.elapsed
    return model, report
