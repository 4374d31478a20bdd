import math

import numpy as np
import pytest

from nnsieve.errors import InvalidInputError
from nnsieve.network import Dataset, Theta, grad, loss, predict
from nnsieve.sieve import is_feasible
from nnsieve.trainer import TrainConfig, alpha_subgradient, fit, initialize, step_size


def test_step_size_values():
    assert step_size(0, 0.1) == pytest.approx(0.1, rel=1e-15)
    # mpmath: 0.1 / log(e + 99)
    assert step_size(99, 0.1) == pytest.approx(0.02163468640306425, rel=1e-13)


def test_step_size_decreasing_and_nonsummable():
    steps = np.array([step_size(k) for k in range(20000)])
    assert np.all(np.diff(steps) < 0)
    # partial sums grow like k / log k; they keep growing without bound
    assert steps.sum() > 150 and steps[:10000].sum() * 1.8 < steps.sum()


class TestAlphaSubgradient:
    def test_violated_constraint_gives_signs(self):
        th = Theta(0.0, [3.0, -4.0], [0.0, 0.0], [[1.0], [1.0]])
        data = Dataset([0.0, 1.0], [0.0, 1.0])
        np.testing.assert_array_equal(alpha_subgradient(th, data, 5.0), [0.0, 1.0, -1.0])

    def test_feasible_perfect_fit(self):
        th = Theta(0.5, [1.0, -2.0], [0.1, 0.2], [[1.0], [-1.0]])
        x = np.linspace(-2, 2, 9)
        g = alpha_subgradient(th, Dataset(x, predict(th, x)), 10.0)
        np.testing.assert_array_equal(g, 0.0)

    def test_feasible_matches_loss_gradient(self):
        rng = np.random.default_rng(4)
        th = Theta(0.2, rng.normal(size=3), rng.normal(size=3), rng.normal(size=(3, 1)))
        data = Dataset(rng.normal(size=10), rng.normal(size=10))
        g = grad(th, data)
        np.testing.assert_allclose(alpha_subgradient(th, data, 100.0), np.r_[g.alpha0, g.alpha])

    def test_subgradient_inequality(self):
        rng = np.random.default_rng(8)
        data = Dataset([0.0], [0.0])
        for _ in range(100):
            r = int(rng.integers(1, 6))
            a = rng.normal(size=r + 1) * 3
            a[rng.random(r + 1) < 0.2] = 0.0
            th = Theta(a[0], a[1:], np.zeros(r), np.zeros((r, 1)))
            V = 0.5 * th.output_l1()
            if not V > 0:
                continue
            g = alpha_subgradient(th, data, V)
            for _ in range(10):
                b = rng.normal(size=r + 1) * 3
                assert np.abs(b).sum() >= np.abs(a).sum() + g @ (b - a) - 1e-12


class TestInitialize:
    def test_deterministic(self):
        cfg = TrainConfig(seed=123)
        a, b = initialize(4, 2, cfg), initialize(4, 2, cfg)
        np.testing.assert_array_equal(a.to_vector(), b.to_vector())

    def test_zero_scale(self):
        th = initialize(3, 1, TrainConfig(init_scale=0.0))
        np.testing.assert_array_equal(th.to_vector(), 0.0)

    def test_default_start_is_feasible(self):
        for seed in range(50):
            assert initialize(4, 1, TrainConfig(seed=seed)).output_l1() <= 10.0

    def test_rescaled_when_needed(self):
        th = initialize(20, 1, TrainConfig(init_scale=5.0, seed=1), V_n=6.0)
        assert th.output_l1() <= 6.0


class TestFit:
    def test_constant_truth(self):
        x = np.random.default_rng(0).normal(size=100)
        data = Dataset(x, np.full(100, 1.7))
        res = fit(data, 1, 10.0, TrainConfig(iterations=20000, seed=3))
        assert res.final_loss < 1e-4
        assert res.feasible and res.iterations_run == 20000

    def test_kernel_step_matches_numpy_gradient(self):
        # one update of the compiled loop against an update built from network.grad
        rng = np.random.default_rng(12)
        data = Dataset(rng.normal(size=(15, 2)), rng.normal(size=15))
        cfg = TrainConfig(iterations=1, seed=5, gamma_learning_rate=0.3)
        th0 = initialize(3, 2, cfg, 10.0)
        res = fit(data, 3, 10.0, cfg)
        g = grad(th0, data)
        delta = step_size(0, cfg.alpha_step_scale)
        expect = Theta(th0.alpha0 - delta * g.alpha0, th0.alpha - delta * g.alpha,
                       th0.gamma0 - 0.3 * g.gamma0, th0.gamma - 0.3 * g.gamma)
        np.testing.assert_allclose(res.last_theta.to_vector(), expect.to_vector(), rtol=1e-13, atol=1e-15)
        assert res.loss_trace[0] == pytest.approx(loss(th0, data), rel=1e-14)

    def test_infeasible_iterates_trigger_sign_steps(self):
        # y = 8 sigma(3x) needs sum |alpha| ~ 8 > V = 5
        x = np.linspace(-3, 3, 80)
        data = Dataset(x, 8.0 / (1 + np.exp(-3 * x)))
        res = fit(data, 2, 5.0, TrainConfig(iterations=3000, seed=1))
        assert not res.feasible_trace.all()
        assert res.feasible and res.theta_hat.output_l1() <= 5.0
        assert is_feasible(res.theta_hat, 2, 5.0)
        feas_losses = res.loss_trace[res.feasible_trace]
        assert res.final_loss == pytest.approx(feas_losses.min())
        assert res.final_loss == pytest.approx(loss(res.theta_hat, data), rel=1e-12)

    def test_running_best_is_monotone(self):
        rng = np.random.default_rng(2)
        data = Dataset(rng.normal(size=40), rng.normal(size=40))
        res = fit(data, 2, 6.0, TrainConfig(iterations=2000, seed=0))
        feas = np.where(res.feasible_trace, res.loss_trace, np.inf)
        best = np.minimum.accumulate(feas)
        assert np.all(np.diff(best) <= 0)
        assert res.final_loss == best[-1]

    def test_bit_identical(self):
        rng = np.random.default_rng(6)
        data = Dataset(rng.normal(size=30), rng.normal(size=30))
        cfg = TrainConfig(iterations=500, seed=9)
        a, b = fit(data, 3, 8.0, cfg), fit(data, 3, 8.0, cfg)
        assert a.theta_hat.to_vector().tobytes() == b.theta_hat.to_vector().tobytes()
        assert a.loss_trace.tobytes() == b.loss_trace.tobytes()

    def test_early_stop(self):
        data = Dataset(np.linspace(-1, 1, 20), np.full(20, 0.5))
        res = fit(data, 1, 10.0, TrainConfig(iterations=50000, eta_n=1e-9))
        assert res.iterations_run < 50000
        assert len(res.loss_trace) == res.iterations_run + 1

    @pytest.mark.parametrize("r,V", [(0, 10.0), (2, 4.0), (2, -1.0)])
    def test_invalid_bounds(self, r, V):
        with pytest.raises(InvalidInputError):
            fit(Dataset([0.0], [0.0]), r, V)

    def test_invalid_config(self):
        with pytest.raises(InvalidInputError):
            TrainConfig(iterations=0)
        with pytest.raises(InvalidInputError):
            TrainConfig(step_rule="adam")
