import math

import numpy as np
import pytest

from annealmf.anneal import (
    AnnealConfig,
    ExponentialCooling,
    LinearCooling,
    accept,
    anneal,
    cool,
    propose,
)
from annealmf.core import FactorModel, init_model
from annealmf.dataio import make_synthetic
from annealmf.evaluation import rmse
from annealmf.sampling import GaussianWalk, LevyWalk, make_rng


class PinnedRng:
    """Stands in for a generator whose next uniform draw is known."""

    def __init__(self, r):
        self.r = r
        self.calls = 0

    def random(self):
        self.calls += 1
        return self.r


@pytest.fixture(scope="module")
def synthetic():
    return make_synthetic(50, 40, 3, 0.1, density=0.4, seed=3)


class TestPropose:
    def test_zero_step_is_identity(self):
        model = init_model(4, 3, 2, seed=0)
        out = propose(model, 0.0, LevyWalk(), make_rng(1), move="full")
        assert np.array_equal(out.stacked, model.stacked)

    def test_deterministic_and_input_untouched(self):
        model = init_model(4, 3, 2, seed=0)
        before = model.stacked.copy()
        a = propose(model, 0.1, LevyWalk(), make_rng(5), move="full")
        b = propose(model, 0.1, LevyWalk(), make_rng(5), move="full")
        assert np.array_equal(a.stacked, b.stacked)
        assert np.array_equal(model.stacked, before)

    def test_single_entry_replays_gaussian_draw(self):
        # a 1x1 grid with K=1 has two stacked entries
        model = FactorModel(1, 1, np.array([[0.7], [-0.2]]))
        d = make_rng(11).normal(0.0, 1.0, size=(2, 1))
        out = propose(model, 0.05, GaussianWalk(1.0), make_rng(11), move="full")
        np.testing.assert_array_equal(out.stacked, model.stacked + 0.05 * d)

    def test_full_move_touches_every_entry(self):
        model = init_model(5, 4, 3, seed=0)
        out = propose(model, 0.1, GaussianWalk(), make_rng(2), move="full")
        assert np.all(out.stacked != model.stacked)

    def test_row_move_touches_one_row(self):
        model = init_model(5, 4, 3, seed=0)
        out = propose(model, 0.1, GaussianWalk(), make_rng(2), move="row")
        changed = np.any(out.stacked != model.stacked, axis=1)
        assert changed.sum() == 1

    def test_unknown_move(self):
        with pytest.raises(ValueError):
            propose(init_model(1, 1, 1, seed=0), 0.1, LevyWalk(), make_rng(0), move="diag")


class TestAccept:
    @pytest.mark.parametrize("r", np.linspace(0.0, 0.999999, 25))
    def test_improvement_always_accepted(self, r):
        rng = PinnedRng(r)
        assert accept(-0.3, 1.0, rng) is True
        assert accept(0.0, 1e-9, rng) is True
        assert rng.calls == 0

    @pytest.mark.parametrize("T", [1.0, 4.0, 0.5])
    def test_tie_at_half_is_rejected(self, T):
        # exp(-T ln2 / T) = 0.5 and 0.5 > 0.5 is false
        delta = T * math.log(2)
        assert math.exp(-delta / T) == 0.5
        assert accept(delta, T, PinnedRng(0.5)) is False
        assert accept(delta, T, PinnedRng(0.4999999)) is True

    def test_vanishing_probability(self):
        for r in (1e-300, 0.1, 0.9):
            assert accept(1e6, 1.0, PinnedRng(r)) is False

    @pytest.mark.parametrize("T", [0.0, -1.0])
    def test_bad_temperature(self, T):
        with pytest.raises(ValueError):
            accept(0.1, T, PinnedRng(0.5))

    def test_frequency_falls_with_temperature(self):
        rng = make_rng(7)
        temps = [10.0, 3.0, 1.0, 0.3, 0.1]
        freqs = [np.mean([accept(0.5, T, rng) for _ in range(100_000)]) for T in temps]
        assert all(a >= b for a, b in zip(freqs, freqs[1:]))
        for T, f in zip(temps, freqs):
            assert f == pytest.approx(math.exp(-0.5 / T), abs=0.01)


class TestCool:
    def test_linear_endpoints(self):
        cfg = AnnealConfig(cooling=LinearCooling(2499.75))
        assert cool(cfg, 10) == pytest.approx(2.5, abs=1e-9)

    @pytest.mark.parametrize("cooling", [LinearCooling(100.0), ExponentialCooling(0.5), None])
    def test_origin(self, cooling):
        assert cool(AnnealConfig(cooling=cooling), 0) == 25000.0

    def test_floor(self):
        cfg = AnnealConfig(cooling=LinearCooling(5000.0))
        assert cool(cfg, 100) == cfg.tf
        cfg = AnnealConfig(cooling=ExponentialCooling(0.1))
        assert cool(cfg, 100) == cfg.tf

    def test_default_exponential_lands_on_tf(self):
        cfg = AnnealConfig(max_iters=10)
        assert cool(cfg, 10) == pytest.approx(2.5, rel=1e-12)
        temps = [cool(cfg, t) for t in range(11)]
        assert all(a > b for a, b in zip(temps, temps[1:]))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AnnealConfig(t0=1.0, tf=2.0)
        with pytest.raises(ValueError):
            LinearCooling(0.0)
        with pytest.raises(ValueError):
            ExponentialCooling(1.0)
        with pytest.raises(ValueError):
            AnnealConfig(move="sideways")


class TestAnneal:
    def test_zero_iterations(self, synthetic):
        init = init_model(50, 40, 20, seed=1)
        model, report = anneal(synthetic, AnnealConfig(max_iters=0, seed=1), init)
        assert np.array_equal(model.stacked, init.stacked)
        assert report.iterations == 0 and report.trace == []

    def test_deterministic(self, synthetic):
        cfg = AnnealConfig(max_iters=50, seed=4)
        a_model, a = anneal(synthetic, cfg)
        b_model, b = anneal(synthetic, cfg)
        assert a.trace == b.trace
        assert a.extra["current_trace"] == b.extra["current_trace"]
        assert np.array_equal(a_model.stacked, b_model.stacked)

    @pytest.mark.parametrize("walk", [LevyWalk(), GaussianWalk()])
    @pytest.mark.parametrize("move", ["row", "full"])
    def test_best_trace_non_increasing(self, synthetic, walk, move):
        for seed in range(5):
            cfg = AnnealConfig(max_iters=100, seed=seed, walk=walk, move=move, step_size=0.05)
            model, report = anneal(synthetic, cfg)
            trace = [report.extra["initial_cost"]] + report.trace
            assert all(b <= a for a, b in zip(trace, trace[1:]))
            assert all(best <= cur for best, cur in zip(report.trace, report.extra["current_trace"]))
            # incremental residual updates must agree with a full recompute
            assert rmse(model, synthetic) == report.train_rmse

    def test_zero_step_keeps_cost_constant(self, synthetic):
        model, report = anneal(synthetic, AnnealConfig(max_iters=20, seed=0, step_size=0.0))
        assert set(report.extra["current_trace"]) == {report.extra["initial_cost"]}

    def test_stops_when_temperature_reaches_tf(self, synthetic):
        cfg = AnnealConfig(max_iters=1000, cooling=LinearCooling(2499.75), seed=0)
        _, report = anneal(synthetic, cfg)
        assert report.iterations == 10

    def test_improves_median_train_rmse(self, synthetic):
        # Monte Carlo self-oracle over 10 seeds, default settings except budget
        gains = []
        for seed in range(10):
            _, report = anneal(synthetic, AnnealConfig(seed=seed, max_iters=200, init=(0.0, 1.0)))
            gains.append(report.extra["initial_cost"] - report.train_rmse)
        assert np.median(gains) > 0

    def test_default_settings_improve_median(self, synthetic):
        finals, initials = [], []
        for seed in range(10):
            _, report = anneal(synthetic, AnnealConfig(seed=seed))
            finals.append(report.train_rmse)
            initials.append(report.extra["initial_cost"])
        assert np.median(finals) < np.median(initials)
        # first-run value, pinned for regression
        assert np.median(finals) == pytest.approx(1.2513246133565266, rel=1e-9)

    def test_dimension_mismatch(self, synthetic):
        with pytest.raises(ValueError):
            anneal(synthetic, AnnealConfig(rank=3), init_model(5, 5, 3, seed=0))
        with pytest.raises(ValueError):
            anneal(synthetic, AnnealConfig(rank=3), init_model(50, 40, 4, seed=0))
