"""scikit-learn style wrappers around the solvers.

Each estimator takes ``X`` as an ``(n, 2)`` array of ``(user, item)``
indices and ``y`` as the ratings, or a :class:`RatingDataset` as ``X``
alone. ``predict`` returns raw model scores unless ``clip`` is set.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .als import AlsConfig, als_train
from .anneal import AnnealConfig, anneal, linear_cooling_for
from .core import clamp_ratings
from .evaluation import rmse
from .sampling import make_walk
from .sgd import SgdConfig, sgd_train
from .validation import check_index_pairs, check_ratings, check_seed
from .wnmf import WnmfConfig, wnmf_train


class _Factorizer(RegressorMixin, BaseEstimator):
    def fit(self, X, y=None):
        data = check_ratings(X, y, self.n_users, self.n_items)
        self.model_, self.report_ = self._solve(data)
        self.n_users_, self.n_items_ = data.shape
        return self

    def _solve(self, data):
        raise NotImplementedError

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_index_pairs(X)
        pred = self.model_.predict_many(X[:, 0], X[:, 1])
        if self.clip is not None:
            pred = clamp_ratings(pred, *self.clip)
        return pred

    def rmse(self, X, y=None) -> float:
        """Root mean squared error on known ratings (lower is better)."""
        check_is_fitted(self, "model_")
        data = check_ratings(X, y, self.n_users_, self.n_items_)
        return rmse(lambda u, i: self.predict(np.column_stack([u, i])), data)


class AnnealingFactorizer(_Factorizer):
    """Matrix factorization by simulated annealing with a Levy-flight walk.

    Parameters
    ----------
    n_components : int, default=20
        Number of latent factors.
    max_iter : int, default=10
        Proposal/acceptance steps.
    step_size : float, default=0.01
        Multiplier on every random-walk draw.
    t0, tf : float, default=25000.0, 2.5
        Initial and final temperature.
    cooling : {"exp", "linear"}, default="exp"
        Exponential or linear schedule, both ending at ``tf`` after
        ``max_iter`` steps.
    walk : {"levy", "gaussian"}, default="levy"
    levy_index : float, default=1.5
    gaussian_stddev : float, default=1.0
    move : {"row", "full"}, default="row"
    init : "mean" or (float, float), default="mean"
    random_state : int or None
    n_users, n_items : int or None
        Grid size; inferred from the largest index when None.
    clip : (float, float) or None
        Clip predictions to this range.
    """

    def __init__(self, n_components=20, max_iter=10, step_size=0.01, t0=25000.0, tf=2.5,
                 cooling="exp", walk="levy", levy_index=1.5, gaussian_stddev=1.0,
                 move="row", init="mean", random_state=None, n_users=None, n_items=None,
                 clip=None):
        self.n_components = n_components
        self.max_iter = max_iter
        self.step_size = step_size
        self.t0 = t0
        self.tf = tf
        self.cooling = cooling
        self.walk = walk
        self.levy_index = levy_index
        self.gaussian_stddev = gaussian_stddev
        self.move = move
        self.init = init
        self.random_state = random_state
        self.n_users = n_users
        self.n_items = n_items
        self.clip = clip

    def get_config(self) -> AnnealConfig:
        if self.cooling == "exp":
            cooling = None
        elif self.cooling == "linear":
            cooling = linear_cooling_for(self.t0, self.tf, self.max_iter)
        else:
            raise ValueError(f"cooling must be 'exp' or 'linear', got {self.cooling!r}")
        init = self.init if isinstance(self.init, str) else tuple(self.init)
        return AnnealConfig(
            t0=self.t0, tf=self.tf, max_iters=self.max_iter, step_size=self.step_size,
            walk=make_walk(self.walk, self.levy_index, self.gaussian_stddev),
            cooling=cooling, rank=self.n_components,
            seed=check_seed(self.random_state), move=self.move, init=init,
        )

    def _solve(self, data):
        return anneal(data, self.get_config())


class BiasedSGDFactorizer(_Factorizer):
    """Biased matrix factorization trained by stochastic gradient descent."""

    def __init__(self, n_components=20, learning_rate=0.005, reg=0.02, n_epochs=30,
                 shuffle=True, update="simultaneous", init_bounds=(0.0, 0.1),
                 random_state=None, n_users=None, n_items=None, clip=None):
        self.n_components = n_components
        self.learning_rate = learning_rate
        self.reg = reg
        self.n_epochs = n_epochs
        self.shuffle = shuffle
        self.update = update
        self.init_bounds = init_bounds
        self.random_state = random_state
        self.n_users = n_users
        self.n_items = n_items
        self.clip = clip

    def get_config(self) -> SgdConfig:
        return SgdConfig(
            learning_rate=self.learning_rate, regularization=self.reg,
            epochs=self.n_epochs, rank=self.n_components,
            seed=check_seed(self.random_state), shuffle=self.shuffle,
            update=self.update, init_bounds=tuple(self.init_bounds),
        )

    def _solve(self, data):
        return sgd_train(data, self.get_config())


class ALSFactorizer(_Factorizer):
    """Matrix factorization by alternating ridge least squares."""

    def __init__(self, n_components=20, reg=0.05, n_sweeps=15, init_bounds=(0.0, 1.0),
                 random_state=None, n_users=None, n_items=None, clip=None):
        self.n_components = n_components
        self.reg = reg
        self.n_sweeps = n_sweeps
        self.init_bounds = init_bounds
        self.random_state = random_state
        self.n_users = n_users
        self.n_items = n_items
        self.clip = clip

    def get_config(self) -> AlsConfig:
        return AlsConfig(
            regularization=self.reg, sweeps=self.n_sweeps, rank=self.n_components,
            seed=check_seed(self.random_state), init_bounds=tuple(self.init_bounds),
        )

    def _solve(self, data):
        return als_train(data, self.get_config())


class WeightedNMF(_Factorizer):
    """Nonnegative factorization fitted on known ratings only."""

    def __init__(self, n_components=20, max_iter=50, epsilon=1e-12, init_bounds=(0.0, 1.0),
                 random_state=None, n_users=None, n_items=None, clip=None):
        self.n_components = n_components
        self.max_iter = max_iter
        self.epsilon = epsilon
        self.init_bounds = init_bounds
        self.random_state = random_state
        self.n_users = n_users
        self.n_items = n_items
        self.clip = clip

    def get_config(self) -> WnmfConfig:
        return WnmfConfig(
            iterations=self.max_iter, rank=self.n_components,
            seed=check_seed(self.random_state), epsilon=self.epsilon,
            init_bounds=tuple(self.init_bounds),
        )

    def _solve(self, data):
        return wnmf_train(data, self.get_config())
