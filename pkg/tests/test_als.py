import numpy as np
import pytest

from annealmf.als import (
    AlsConfig,
    SingularSystemError,
    als_objective,
    als_solve_side,
    als_train,
)
from annealmf.core import RatingDataset, init_model
from annealmf.dataio import make_synthetic
from annealmf.sampling import STREAM_INIT, make_rng


def test_scalar_least_squares_is_exact():
    data = RatingDataset([0, 0], [0, 1], [2.0, 4.0])
    items = np.array([[1.0], [2.0]])
    users = als_solve_side(data, items, 0.0, "users")
    # (2*1 + 4*2) / (1 + 4)
    assert users[0, 0] == 2.0


def test_heavy_ridge_shrinks_to_zero():
    data = make_synthetic(20, 15, 3, 0.1, seed=0)
    fixed = np.random.default_rng(0).uniform(0, 1, (15, 4))
    solved = als_solve_side(data, fixed, 1e9, "users")
    assert np.linalg.norm(solved, axis=1).max() < 1e-6


@pytest.mark.parametrize("side", ["users", "items"])
def test_exact_low_rank_data_is_recovered(side):
    rng = np.random.default_rng(1)
    M, N, K = 12, 10, 3
    U, V = rng.normal(size=(M, K)), rng.normal(size=(N, K))
    mask = rng.random((M, N)) < 0.7
    users, items = np.nonzero(mask)
    data = RatingDataset(users, items, np.einsum("ij,ij->i", U[users], V[items]), M, N)
    if side == "users":
        solved = als_solve_side(data, V, 0.0, "users")
        pred = np.einsum("ij,ij->i", solved[users], V[items])
    else:
        solved = als_solve_side(data, U, 0.0, "items")
        pred = np.einsum("ij,ij->i", U[users], solved[items])
    assert np.abs(pred - data.ratings).max() < 1e-8


def test_matches_dense_normal_equations():
    data = make_synthetic(8, 6, 2, 0.2, density=0.6, seed=4)
    fixed = np.random.default_rng(2).normal(size=(6, 3))
    lam = 0.7
    solved = als_solve_side(data, fixed, lam, "users")
    for m in range(8):
        rated = data.items[data.users == m]
        r = np.array([data.ratings[(data.users == m) & (data.items == n)][0] for n in rated])
        F = fixed[rated]
        expected = np.linalg.inv(F.T @ F + lam * np.eye(3)) @ (F.T @ r)
        np.testing.assert_allclose(solved[m], expected, rtol=1e-10)


def test_rank_deficient_without_ridge_raises():
    data = RatingDataset([0, 1, 1], [0, 0, 1], [3.0, 4.0, 2.0])
    fixed = np.array([[1.0, 0.5], [0.3, 2.0]])
    with pytest.raises(SingularSystemError, match="user row 0"):
        als_solve_side(data, fixed, 0.0, "users")


def test_rows_without_ratings_keep_current():
    data = RatingDataset([0], [0], [3.0], num_users=3, num_items=1)
    current = np.array([[9.0], [7.0], [5.0]])
    solved = als_solve_side(data, np.array([[1.0]]), 0.1, "users", current=current)
    assert solved[1, 0] == 7.0 and solved[2, 0] == 5.0
    assert solved[0, 0] == pytest.approx(3.0 / 1.1)


def test_bad_side():
    data = RatingDataset([0], [0], [3.0])
    with pytest.raises(ValueError):
        als_solve_side(data, np.ones((1, 1)), 0.1, "rows")


@pytest.fixture(scope="module")
def data():
    return make_synthetic(60, 45, 4, 0.3, density=0.3, seed=5)


class TestAlsTrain:
    def test_zero_sweeps(self, data):
        cfg = AlsConfig(sweeps=0, rank=5, seed=2)
        model, report = als_train(data, cfg)
        init = init_model(60, 45, 5, make_rng(2, STREAM_INIT))
        np.testing.assert_array_equal(model.stacked, init.stacked)
        assert report.trace == []

    def test_deterministic(self, data):
        cfg = AlsConfig(sweeps=3, rank=5, seed=2)
        assert als_train(data, cfg)[1].trace == als_train(data, cfg)[1].trace

    @pytest.mark.parametrize("reg", [0.05, 1.0, 10.0])
    def test_objective_never_increases(self, data, reg):
        cfg = AlsConfig(sweeps=10, rank=6, seed=0, regularization=reg)
        model, report = als_train(data, cfg)
        init = init_model(60, 45, 6, make_rng(0, STREAM_INIT))
        trace = [als_objective(init, data, reg)] + report.trace
        assert len(report.trace) == 20
        for before, after in zip(trace, trace[1:]):
            assert after <= before * (1 + 1e-12)
