import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modshift.errors import ConfigurationError, DivergenceError, ProtocolError
from modshift.experiment import ExperimentConfig, generate_agent_data
from modshift.fedcore import (
    Delta,
    LocalDataset,
    QuadraticLoss,
    TrainConfig,
    aggregate,
    compute_delta,
    global_loss,
    local_descent,
    mse_gradient,
    mse_loss,
    pool_datasets,
)


def one_sample(x, y, agent_id=0):
    return LocalDataset(np.array([x], dtype=float), np.array([y], dtype=float), agent_id)


def cfg(eta=0.005, R=1, K=1):
    return TrainConfig(eta, R, 1, np.full(K, 1.0 / K))


@pytest.fixture(scope="module")
def default_agent():
    # one agent of the default synthetic setup: d=60, 1000 samples, ramp w*, noise 0.1
    return generate_agent_data(ExperimentConfig(), 0)


def fd_gradient(f, w, rel_step=1e-5):
    g = np.empty_like(w)
    for i in range(w.size):
        h = rel_step * max(1.0, abs(w[i]))
        e = np.zeros_like(w)
        e[i] = h
        g[i] = (f(w + e) - f(w - e)) / (2 * h)
    return g


class TestLoss:
    def test_exact_fit_is_zero(self):
        assert mse_loss([1.0, 1.0], one_sample([2, 3], 5)) == 0.0

    def test_zero_weights(self):
        assert mse_loss([0.0, 0.0], one_sample([2, 3], 5)) == 25.0

    def test_ramp_weights_leave_label_noise(self, default_agent):
        # squared N(0, 0.1^2) noise averages to 0.01
        assert mse_loss(np.arange(1.0, 61.0), default_agent) == pytest.approx(0.01, rel=0.10)

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            mse_loss([1.0, 2.0, 3.0], one_sample([2, 3], 5))

    def test_quadratic_evaluator_matches(self, default_agent):
        q = QuadraticLoss(default_agent)
        rng = np.random.default_rng(3)
        for _ in range(5):
            w = rng.normal(size=60) * 10
            assert q(w) == pytest.approx(mse_loss(w, default_agent), rel=1e-10)


class TestGradient:
    def test_exact_fit_zero(self):
        assert np.array_equal(mse_gradient([1.0, 1.0], one_sample([2, 3], 5)), [0.0, 0.0])

    def test_scalar_case(self):
        assert mse_gradient([0.0], one_sample([1], 1)) == pytest.approx([-2.0])

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 40), d=st.integers(1, 8))
    def test_matches_finite_differences(self, seed, m, d):
        rng = np.random.default_rng(seed)
        data = LocalDataset(rng.normal(size=(m, d)), rng.normal(size=m))
        w = rng.normal(size=d) * 3
        fd = fd_gradient(lambda v: mse_loss(v, data), w)
        g = mse_gradient(w, data)
        assert np.linalg.norm(g - fd) <= 1e-6 * max(np.linalg.norm(fd), 1e-8)


class TestGlobalLoss:
    def test_single_agent(self, default_agent):
        w = np.ones(60)
        assert global_loss(w, [default_agent]) == pytest.approx(mse_loss(w, default_agent), rel=1e-15)

    def test_identical_agents(self):
        a = one_sample([2, 3], 4, 0)
        b = one_sample([2, 3], 4, 1)
        assert global_loss([1.0, 1.0], [a, b]) == pytest.approx(mse_loss([1.0, 1.0], a))

    def test_weighted_regrouping(self):
        rng = np.random.default_rng(7)
        sets = [LocalDataset(rng.normal(size=(m, 4)), rng.normal(size=m), k) for k, m in enumerate([3, 10, 25])]
        w = rng.normal(size=4)
        m = sum(ds.size for ds in sets)
        regrouped = sum(ds.size / m * mse_loss(w, ds) for ds in sets)
        assert abs(global_loss(w, sets) - regrouped) <= 1e-12
        assert mse_loss(w, pool_datasets(sets)) == pytest.approx(regrouped, rel=1e-12)

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            global_loss([1.0], [])


class TestLocalDescent:
    def test_fixed_point(self):
        w = np.array([1.0, 1.0])
        out = local_descent(w, one_sample([2, 3], 5), cfg(R=10))
        assert np.array_equal(out, w)

    def test_single_step(self):
        assert local_descent([0.0], one_sample([1], 1), cfg(R=1)) == pytest.approx([0.01])

    def test_loss_decreases_every_step(self, default_agent):
        w = np.zeros(60)
        losses = [mse_loss(w, default_agent)]
        one_step = cfg(R=1)
        for _ in range(10):
            w = local_descent(w, default_agent, one_step)
            losses.append(mse_loss(w, default_agent))
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_divergence_names_round_and_agent(self):
        # step size far above 2 / curvature: the iterate grows ~400x per step
        data = one_sample([10.0, 10.0], 1.0, agent_id=7)
        with pytest.raises(DivergenceError) as err:
            local_descent([1.0, 1.0], data, cfg(eta=1.0, R=200), round=3)
        assert err.value.round == 3 and err.value.agent_id == 7
        assert "round 3" in str(err.value) and "agent 7" in str(err.value)


class TestDeltaAndAggregate:
    def test_identical_vectors(self):
        assert np.array_equal(compute_delta([1.0, 2.0], [1.0, 2.0], 0).values, [0.0, 0.0])

    def test_difference(self):
        dl = compute_delta([2.0, 3.0], [1.0, 1.0], 0, 4)
        assert np.array_equal(dl.values, [1.0, 2.0]) and dl.round == 4

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=6))
    def test_round_trip(self, vals):
        w_local = np.array(vals)
        w_global = w_local[::-1].copy()
        # a + (b - a) == b is not exact in floating point, so compare with a ulp-level tolerance
        dl = compute_delta(w_local, w_global, 0)
        assert np.allclose(w_global + dl.values, w_local, rtol=1e-15, atol=1e-9)

    def test_mismatch(self):
        with pytest.raises(ConfigurationError):
            compute_delta([1.0], [1.0, 2.0], 0)

    def test_zero_deltas(self):
        w = np.array([3.0, -1.0])
        out = aggregate(w, [Delta([0.0, 0.0], 0), Delta([0.0, 0.0], 1)], [0.5, 0.5])
        assert np.array_equal(out, w)

    def test_two_agents(self):
        out = aggregate(np.zeros(2), [Delta([2.0, 0.0], 0), Delta([0.0, 2.0], 1)], [0.5, 0.5])
        assert np.array_equal(out, [1.0, 1.0])

    def test_identical_deltas_many_agents(self):
        delta = np.array([0.25, -0.5, 1.0])
        w = np.array([1.0, 2.0, 3.0])
        out = aggregate(w, [Delta(delta, k) for k in range(100)], np.full(100, 0.01))
        assert np.allclose(out, w + delta, atol=1e-14)

    def test_missing_and_duplicate_agents(self):
        with pytest.raises(ProtocolError):
            aggregate(np.zeros(2), [Delta([1.0, 0.0], 0), Delta([1.0, 0.0], 0)], [0.5, 0.5])
        with pytest.raises(ProtocolError):
            aggregate(np.zeros(2), [Delta([1.0, 0.0], 0)], [0.5, 0.5])

    def test_mixed_rounds(self):
        with pytest.raises(ProtocolError):
            aggregate(np.zeros(2), [Delta([1.0, 0.0], 0, 1), Delta([1.0, 0.0], 1, 2)], [0.5, 0.5])

    def test_order_independent_and_reproducible(self):
        rng = np.random.default_rng(11)
        deltas = [Delta(rng.normal(size=5), k) for k in range(20)]
        weights = rng.dirichlet(np.ones(20))
        weights /= weights.sum()
        a = aggregate(np.zeros(5), deltas, weights)
        b = aggregate(np.zeros(5), deltas[::-1], weights)
        assert np.array_equal(a, b)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ConfigurationError):
            TrainConfig(0.1, 1, 1, [0.5, 0.6])
        with pytest.raises(ConfigurationError):
            TrainConfig(0.1, 1, 1, [1.5, -0.5])


def test_dataset_validation():
    with pytest.raises(ConfigurationError):
        LocalDataset(np.ones((3, 2)), np.ones(2))
    with pytest.raises(ConfigurationError):
        LocalDataset(np.ones((0, 2)), np.ones(0))
