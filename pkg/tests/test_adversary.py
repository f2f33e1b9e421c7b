import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modshift.adversary import (
    TamperBoundInputs,
    alpha,
    eve_update,
    initial_state,
    tamper_bound,
    tamper_test,
)
from modshift.errors import ConfigurationError
from modshift.fedcore import Delta, aggregate
from modshift.shiftdesign import ShiftScheme, apply_shift, make_gamma


class TestEveUpdate:
    def test_zero_observations(self):
        state = initial_state([1.0, 2.0])
        new = eve_update(state, [np.zeros(2), np.zeros(2)], [0.5, 0.5])
        assert np.array_equal(new.w_eve, [1.0, 2.0]) and new.history == [0.0]

    def test_unshifted_noiseless_matches_server(self):
        rng = np.random.default_rng(0)
        deltas = [Delta(rng.normal(size=4), k) for k in range(3)]
        weights = np.array([0.2, 0.3, 0.5])
        w0 = rng.normal(size=4)
        eve = eve_update(initial_state(w0), [dl.values for dl in deltas], weights)
        assert np.array_equal(eve.w_eve, aggregate(w0, deltas, weights))

    def test_mean_shift_single_agent_sums_to_zero(self):
        dl = Delta([3.0, -1.0, 4.0, 1.5], 0)
        obs = apply_shift(dl, make_gamma(ShiftScheme("mean"), dl)).values
        eve = eve_update(initial_state(np.zeros(4)), [obs], [1.0])
        assert abs(eve.w_eve.sum()) < 1e-12
        assert eve.history[-1] == pytest.approx(np.linalg.norm(obs))

    def test_history_grows(self):
        state = initial_state(np.zeros(2))
        for _ in range(3):
            state = eve_update(state, [np.ones(2)], [1.0])
        assert state.rounds == 3 and np.array_equal(state.w_eve, [3.0, 3.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            eve_update(initial_state(np.zeros(2)), [np.zeros(3)], [1.0])


class TestAlpha:
    def test_identical_deltas(self):
        dl = np.array([1.0, -2.0, 0.5])
        assert alpha([Delta(dl, k) for k in range(4)], np.full(4, 0.25)) == pytest.approx(1.0)

    def test_orthogonal_pair(self):
        # (1/2 + 1/2) / |[1/2, 1/2]| = sqrt(2)
        a = alpha([Delta([1.0, 0.0], 0), Delta([0.0, 1.0], 1)], [0.5, 0.5])
        assert a == pytest.approx(math.sqrt(2))

    def test_near_cancellation_diverges(self):
        vals = [alpha([Delta([1.0, 0.0], 0), Delta([-1.0 + t, 0.0], 1)], [0.5, 0.5]) for t in (1e-2, 1e-4, 1e-6)]
        assert vals[0] < vals[1] < vals[2] and vals[2] > 1e6

    def test_exact_cancellation_is_infinite(self):
        assert math.isinf(alpha([Delta([1.0, 0.0], 0), Delta([-1.0, 0.0], 1)], [0.5, 0.5]))

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(2, 10))
    def test_at_least_one(self, seed, K, d):
        rng = np.random.default_rng(seed)
        deltas = [Delta(rng.normal(size=d), k) for k in range(K)]
        assert alpha(deltas, rng.dirichlet(np.ones(K)) / 1.0) >= 1.0 - 1e-12

    def test_positive_multiples_give_one(self):
        v = np.array([0.3, -1.0, 2.0])
        deltas = [Delta(s * v, k) for k, s in enumerate([0.5, 2.0, 7.0])]
        assert alpha(deltas, [0.2, 0.3, 0.5]) == pytest.approx(1.0, abs=1e-14)


class TestBound:
    def test_no_shift(self):
        assert tamper_bound(TamperBoundInputs(0.7, [0.0, 0.0]), 60) == 0.7

    def test_unit_norm_gamma_d60(self):
        assert tamper_bound(TamperBoundInputs(1.0, [1.0]), 60) == pytest.approx(1 + math.sqrt(60))
        assert 1 + math.sqrt(60) == pytest.approx(8.746, abs=5e-4)

    @pytest.mark.parametrize("d", [2, 5, 60, 1000])
    def test_mean_gamma_factor_two(self, d):
        assert tamper_bound(TamperBoundInputs(3.0, [1 / math.sqrt(d)]), d) == pytest.approx(6.0)

    def test_heterogeneous_form(self):
        inputs = TamperBoundInputs(0.5, [1.0, 2.0], alpha=1.5, homogeneous=False)
        assert tamper_bound(inputs, 4) == pytest.approx(0.5 * (1 + 2 * 2.0 * 1.5))

    def test_infinite_alpha(self):
        assert math.isinf(tamper_bound(TamperBoundInputs(0.0, [1.0, 1.0], math.inf, False), 4))

    def test_alpha_below_one_rejected(self):
        with pytest.raises(ConfigurationError):
            TamperBoundInputs(1.0, [1.0], alpha=0.5)

    @pytest.mark.parametrize("norm, bound, ok", [(5.0, 2.0, False), (0.0, 0.0, True), (2.0, 2.0, True)])
    def test_tamper_test(self, norm, bound, ok):
        assert tamper_test(norm, bound) is ok


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10), st.integers(2, 12), st.sampled_from(["mean", "comp"]))
def test_homogeneous_bound_holds_for_any_deltas(seed, K, d, kind):
    """Shared gamma: Eve's update norm never exceeds eps (1 + sqrt(d) |gamma|)."""
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(K))
    weights /= weights.sum()
    deltas = [Delta(rng.normal(size=d), k) for k in range(K)]
    g = make_gamma(ShiftScheme(kind), deltas[0])
    obs = [apply_shift(dl, g).values for dl in deltas]
    eps = np.linalg.norm(aggregate(np.zeros(d), deltas, weights))
    eve = eve_update(initial_state(np.zeros(d)), obs, weights)
    assert tamper_test(eve.history[-1], tamper_bound(TamperBoundInputs(eps, [np.linalg.norm(g)]), d))


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10), st.integers(2, 12))
def test_heterogeneous_bound_holds_for_any_deltas(seed, K, d):
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(K))
    weights /= weights.sum()
    deltas = [Delta(rng.normal(size=d), k) for k in range(K)]
    gammas = [make_gamma(ShiftScheme("max"), dl) for dl in deltas]
    obs = [apply_shift(dl, g).values for dl, g in zip(deltas, gammas)]
    eps = np.linalg.norm(aggregate(np.zeros(d), deltas, weights))
    a = alpha(deltas, weights)
    eve = eve_update(initial_state(np.zeros(d)), obs, weights)
    bound = tamper_bound(TamperBoundInputs(eps, [1.0] * K, a, homogeneous=False), d)
    assert tamper_test(eve.history[-1], bound)
