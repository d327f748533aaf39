"""Simulated annealing over the stacked factor matrix with Levy or Gaussian moves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    FactorModel,
    RatingDataset,
    SolverReport,
    _Stopwatch,
    init_model,
    mean_matched_bounds,
)
from .sampling import (
    RNG_ALGORITHM,
    STREAM_ACCEPT,
    STREAM_INIT,
    STREAM_WALK,
    LevyWalk,
    WalkKind,
    make_rng,
)


@dataclass(frozen=True)
class LinearCooling:
    """``T(t) = T0 - beta * t``."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"linear cooling needs beta > 0, got {self.beta}")

    def temperature(self, t0: float, t: int) -> float:
        return t0 - self.beta * t


@dataclass(frozen=True)
class ExponentialCooling:
    """``T(t) = T0 * ratio ** t``."""

    ratio: float

    def __post_init__(self):
        if not 0 < self.ratio < 1:
            raise ValueError(f"exponential cooling needs 0 < ratio < 1, got {self.ratio}")

    def temperature(self, t0: float, t: int) -> float:
        return t0 * self.ratio**t


@dataclass(frozen=True)
class AnnealConfig:
    """Hyperparameters of one annealing run.

    Defaults: 10 iterations, rank 20, step size 0.01, temperatures 25000
    down to 2.5. When ``cooling`` is None an exponential schedule is used
    whose ratio lands exactly on ``tf`` after ``max_iters`` steps.

    ``init`` is either ``"mean"`` (entries uniform within 10% of
    ``sqrt(train_mean / rank)``) or an explicit ``(lower, upper)`` pair.
    ``move`` selects whether one random row (``"row"``, a single user or
    item vector) or every entry (``"full"``) is perturbed per iteration.
    Full-matrix Levy moves almost surely contain a few very long jumps, so
    on realistic sizes they are rejected by best-tracking every time.
    """

    t0: float = 25000.0
    tf: float = 2.5
    max_iters: int = 10
    step_size: float = 0.01
    walk: WalkKind = field(default_factory=LevyWalk)
    cooling: LinearCooling | ExponentialCooling | None = None
    rank: int = 20
    seed: int | None = None
    move: str = "row"
    init: str | tuple[float, float] = "mean"

    def __post_init__(self):
        if not (self.t0 > 0 and self.tf > 0):
            raise ValueError("temperatures must be positive")
        if not self.tf < self.t0:
            raise ValueError(f"tf ({self.tf}) must be below t0 ({self.t0})")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if not self.step_size >= 0 or not math.isfinite(self.step_size):
            raise ValueError(f"step_size must be a finite non-negative number, got {self.step_size}")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.move not in ("full", "row"):
            raise ValueError(f"move must be 'full' or 'row', got {self.move!r}")
        if isinstance(self.init, str) and self.init != "mean":
            raise ValueError(f"init must be 'mean' or a (lower, upper) pair, got {self.init!r}")

    @property
    def schedule(self) -> LinearCooling | ExponentialCooling:
        if self.cooling is not None:
            return self.cooling
        n = max(self.max_iters, 1)
        return ExponentialCooling((self.tf / self.t0) ** (1.0 / n))

    def describe(self) -> dict:
        sched = self.schedule
        if isinstance(sched, LinearCooling):
            cooling = {"cooling": "linear", "beta": sched.beta}
        else:
            cooling = {"cooling": "exp", "ratio": sched.ratio}
        return {
            "t0": self.t0, "tf": self.tf, "max_iters": self.max_iters,
            "step_size": self.step_size, "rank": self.rank, "seed": self.seed,
            "move": self.move, "init": self.init, **self.walk.describe(), **cooling,
        }


def linear_cooling_for(t0: float, tf: float, max_iters: int) -> LinearCooling:
    """Linear schedule reaching ``tf`` exactly at ``max_iters``."""
    return LinearCooling((t0 - tf) / max(max_iters, 1))


@dataclass
class AnnealState:
    current: FactorModel
    current_cost: float
    best: FactorModel
    best_cost: float
    temperature: float
    iteration: int = 0


def cool(config: AnnealConfig, t: int) -> float:
    """Temperature at iteration ``t``, never below ``config.tf``."""
    if t < 0:
        raise ValueError("iteration must be non-negative")
    return max(config.schedule.temperature(config.t0, t), config.tf)


def propose(current: FactorModel, step_size: float, walk: WalkKind,
            rng: np.random.Generator, move: str = "full") -> FactorModel:
    """Random-walk neighbour: ``entry + step_size * draw`` for each perturbed entry."""
    stacked = current.stacked.copy()
    if move == "full":
        stacked += step_size * walk.sample(rng, stacked.shape)
    elif move == "row":
        row = rng.integers(stacked.shape[0])
        stacked[row] += step_size * walk.sample(rng, stacked.shape[1])
    else:
        raise ValueError(f"unknown move {move!r}")
    return FactorModel(current.num_users, current.num_items, stacked)


def accept(delta_f: float, temperature: float, rng) -> bool:
    """Metropolis rule: improvements always, otherwise iff ``exp(-delta_f / T) > r``."""
    if not temperature > 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    if delta_f <= 0:
        return True
    r = rng.random()
    return math.exp(-delta_f / temperature) > r


def initial_model(train: RatingDataset, config: AnnealConfig) -> FactorModel:
    if config.init == "mean":
        lower, upper = mean_matched_bounds(train.mean(), config.rank)
    else:
        lower, upper = config.init
    return init_model(
        train.num_users, train.num_items, config.rank,
        make_rng(config.seed, STREAM_INIT), lower, upper,
    )


def anneal(train: RatingDataset, config: AnnealConfig,
           initial: FactorModel | None = None) -> tuple[FactorModel, SolverReport]:
    """Minimise training RMSE by simulated annealing.

    Each iteration proposes a random-walk neighbour, accepts it by the
    Metropolis rule at the current temperature, tracks the best model seen
    and cools. Stops when the temperature reaches ``tf`` or after
    ``max_iters`` iterations. Returns the best model.
    """
    if len(train) == 0:
        raise ValueError("empty training set")
    if initial is None:
        initial = initial_model(train, config)
    if (initial.num_users, initial.num_items) != train.shape:
        raise ValueError("initial model dimensions do not match the training set")
    if initial.rank != config.rank:
        raise ValueError(f"initial model has rank {initial.rank}, config says {config.rank}")

    walk_rng = make_rng(config.seed, STREAM_WALK)
    accept_rng = make_rng(config.seed, STREAM_ACCEPT)
    users = train.users
    item_rows = train.items + train.num_users
    ratings = train.ratings

    user_ptr, user_order = train.by_user
    item_ptr, item_order = train.by_item
    M = train.num_users

    def residuals(stacked):
        return ratings - np.einsum("ij,ij->i", stacked[users], stacked[item_rows])

    def rated_by(row):
        if row < M:
            return user_order[user_ptr[row]:user_ptr[row + 1]]
        row -= M
        return item_order[item_ptr[row]:item_ptr[row + 1]]

    def candidate_residuals(candidate, current, err):
        # only ratings touching a changed row need recomputing
        changed = np.flatnonzero(np.any(candidate.stacked != current.stacked, axis=1))
        if len(changed) > 1:
            return residuals(candidate.stacked)
        err = err.copy()
        if len(changed) == 1:
            idx = rated_by(int(changed[0]))
            S = candidate.stacked
            err[idx] = ratings[idx] - np.einsum("ij,ij->i", S[users[idx]], S[item_rows[idx]])
        return err

    def cost_of(err):
        return math.sqrt(np.dot(err, err) / len(err))

    start = initial.copy()
    current_err = residuals(start.stacked)
    start_cost = cost_of(current_err)
    state = AnnealState(start, start_cost, start, start_cost, cool(config, 0))
    report = SolverReport("sa-" + config.walk.name, rng_algorithm=RNG_ALGORITHM)
    current_trace, temperatures = [], []
    accepted = 0

    with _Stopwatch() as clock:
        while state.temperature > config.tf and state.iteration < config.max_iters:
            candidate = propose(state.current, config.step_size, config.walk, walk_rng, config.move)
            cand_err = candidate_residuals(candidate, state.current, current_err)
            cand_cost = cost_of(cand_err)
            temperatures.append(state.temperature)
            if accept(cand_cost - state.current_cost, state.temperature, accept_rng):
                state.current, state.current_cost = candidate, cand_cost
                current_err = cand_err
                accepted += 1
            if state.current_cost < state.best_cost:
                state.best, state.best_cost = state.current, state.current_cost
            report.trace.append(state.best_cost)
            current_trace.append(state.current_cost)
            state.iteration += 1
            state.temperature = cool(config, state.iteration)

    report.iterations = state.iteration
    report.train_rmse = state.best_cost
    report.wall_time = clock.elapsed
    report.extra.update(
        initial_cost=start_cost,
        current_trace=current_trace,
        temperatures=temperatures,
        accepted=accepted,
    )
    return state.best.copy(), report
