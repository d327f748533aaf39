"""Alternating least squares with per-row ridge normal equations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FactorModel, RatingDataset, SolverReport, _Stopwatch, init_model
from .evaluation import rmse
from .sampling import RNG_ALGORITHM, STREAM_INIT, make_rng


class SingularSystemError(np.linalg.LinAlgError):
    """A row's normal equations have no unique solution."""


@dataclass(frozen=True)
class AlsConfig:
    regularization: float = 0.05
    sweeps: int = 15
    rank: int = 20
    seed: int | None = None
    init_bounds: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if not (self.regularization >= 0 and math.isfinite(self.regularization)):
            raise ValueError(f"regularization must be finite and >= 0, got {self.regularization}")
        if self.sweeps < 0:
            raise ValueError("sweeps must be non-negative")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")

    def describe(self) -> dict:
        return {
            "reg": self.regularization, "sweeps": self.sweeps, "rank": self.rank,
            "seed": self.seed, "init_bounds": list(self.init_bounds),
        }


def als_solve_side(train: RatingDataset, fixed: np.ndarray, regularization: float,
                   side: str, current: np.ndarray | None = None) -> np.ndarray:
    """Solve every row of one side with the other side held fixed.

    Each row ``x`` solves ``(F^T F + reg * I) x = F^T r`` where ``F`` stacks
    the fixed vectors of the rows it has ratings with and ``r`` holds those
    ratings. Rows without ratings keep their value from ``current`` (zeros
    when ``current`` is None).

    Parameters
    ----------
    fixed : ndarray of shape (n_other, K)
        Item factors when solving users, user factors when solving items.
    side : {"users", "items"}
    """
    if side == "users":
        (indptr, order), other, n_rows = train.by_user, train.items, train.num_users
    elif side == "items":
        (indptr, order), other, n_rows = train.by_item, train.users, train.num_items
    else:
        raise ValueError(f"side must be 'users' or 'items', got {side!r}")
    if regularization < 0:
        raise ValueError("regularization must be >= 0")
    fixed = np.asarray(fixed, dtype=np.float64)
    K = fixed.shape[1]
    if current is None:
        out = np.zeros((n_rows, K))
    else:
        out = np.array(current, dtype=np.float64)
        if out.shape != (n_rows, K):
            raise ValueError(f"current must have shape {(n_rows, K)}, got {out.shape}")
    ridge = regularization * np.eye(K)

    for row in range(n_rows):
        idx = order[indptr[row]:indptr[row + 1]]
        if len(idx) == 0:
            continue
        F = fixed[other[idx]]
        A = F.T @ F + ridge
        b = F.T @ train.ratings[idx]
        if regularization == 0 and np.linalg.matrix_rank(F) < K:
            raise SingularSystemError(
                f"{side[:-1]} row {row}: normal matrix is rank deficient and regularization is 0"
            )
        try:
            out[row] = np.linalg.solve(A, b)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"{side[:-1]} row {row}: {exc}") from exc
    return out


def als_objective(model: FactorModel, train: RatingDataset, regularization: float) -> float:
    """Squared error over known ratings plus ``reg * (|U|_F^2 + |I|_F^2)``."""
    err = train.ratings - model.predict_many(train.users, train.items)
    S = model.stacked
    return float(np.dot(err, err) + regularization * np.sum(S * S))


def als_train(train: RatingDataset, cfg: AlsConfig) -> tuple[FactorModel, SolverReport]:
    """Alternate user and item solves for ``cfg.sweeps`` rounds."""
    if len(train) == 0:
        raise ValueError("empty training set")
    model = init_model(
        train.num_users, train.num_items, cfg.rank,
        make_rng(cfg.seed, STREAM_INIT), *cfg.init_bounds,
    )
    M = train.num_users
    report = SolverReport("als", rng_algorithm=RNG_ALGORITHM)
    lam = cfg.regularization
    with _Stopwatch() as clock:
        for _ in range(cfg.sweeps):
            S = model.stacked
            S[:M] = als_solve_side(train, S[M:], lam, "users", current=S[:M])
            report.trace.append(als_objective(model, train, lam))
            S[M:] = als_solve_side(train, S[:M], lam, "items", current=S[M:])
            report.trace.append(als_objective(model, train, lam))
            report.iterations += 1
    report.train_rmse = rmse(model, train)
    report.wall_time = clock.elapsed
    return model, report
