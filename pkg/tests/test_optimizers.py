import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairopt.errors import InvalidParameterError, NonFiniteInputError, UnsupportedAlgorithmError
from fairopt.optimizers import (
    ADAPTIVE,
    Algorithm,
    OptimizerConfig,
    OptimizerState,
    adabound_bounds,
    effective_rate,
    step,
)

ALL = list(Algorithm)


def run(config, w0, grads):
    s = OptimizerState(w0)
    for g in grads:
        s = step(s, config, g)
    return s


class TestConfig:
    def test_defaults(self):
        c = OptimizerConfig()
        assert (c.gamma, c.beta1, c.beta2, c.epsilon, c.weight_decay) == (0.9, 0.9, 0.999, 1e-8, 1e-4)

    @pytest.mark.parametrize("field,value", [("eta", 0.0), ("gamma", 1.0), ("beta1", 0.0), ("beta2", 1.5),
                                             ("epsilon", -1e-8), ("momentum", 1.0), ("weight_decay", -1.0),
                                             ("adabound_final_lr", 0.0)])
    def test_invalid(self, field, value):
        with pytest.raises(InvalidParameterError):
            OptimizerConfig(**{field: value})

    def test_round_trip(self):
        c = OptimizerConfig(Algorithm.ADABOUND, eta=0.003, gamma=0.95)
        assert OptimizerConfig.from_dict(c.to_dict()) == c

    def test_string_algorithm(self):
        assert OptimizerConfig("rmsprop").algorithm is Algorithm.RMSPROP


class TestHandSteps:
    def test_sgd(self):
        s = step(OptimizerState([1.0]), OptimizerConfig(Algorithm.SGD, eta=0.1), [0.5])
        assert s.w[0] == pytest.approx(0.95, abs=1e-15)

    def test_rmsprop_first_step(self):
        c = OptimizerConfig(Algorithm.RMSPROP, eta=0.1, gamma=0.9, epsilon=0.0)
        s = step(OptimizerState([0.0]), c, [1.0])
        assert s.v[0] == pytest.approx(0.1, abs=1e-15)
        assert s.w[0] == pytest.approx(-0.316228, abs=1e-6)

    def test_rmsprop_epsilon_inside_root(self):
        c = OptimizerConfig(Algorithm.RMSPROP, eta=0.1, gamma=0.5, epsilon=0.5)
        s = step(OptimizerState([0.0]), c, [1.0])
        assert s.w[0] == pytest.approx(-0.1 / math.sqrt(0.5 + 0.5), abs=1e-15)

    def test_adam_first_step(self):
        c = OptimizerConfig(Algorithm.ADAM, eta=0.01, epsilon=0.0)
        s = step(OptimizerState([0.0]), c, [2.0])
        assert s.w[0] == pytest.approx(-0.01, abs=1e-15)
        assert s.k == 1

    def test_adam_epsilon_outside_root(self):
        c = OptimizerConfig(Algorithm.ADAM, eta=0.01, epsilon=1.0)
        s = step(OptimizerState([0.0]), c, [2.0])
        assert s.w[0] == pytest.approx(-0.01 * 2.0 / (2.0 + 1.0), abs=1e-15)

    def test_momentum(self):
        c = OptimizerConfig(Algorithm.SGD_MOMENTUM, eta=0.1, momentum=0.5)
        s = run(c, [0.0], [[1.0], [1.0]])
        # m: 1, then 0.5 + 1 = 1.5; w: -0.1, then -0.25
        assert s.w[0] == pytest.approx(-0.25, abs=1e-15)

    def test_adamw_decays_before_update(self):
        c = OptimizerConfig(Algorithm.ADAMW, eta=0.1, weight_decay=0.5, epsilon=0.0)
        s = step(OptimizerState([2.0]), c, [1.0])
        assert s.w[0] == pytest.approx(2.0 - 0.1 * 0.5 * 2.0 - 0.1, abs=1e-15)

    def test_adam_second_step_bias_correction(self):
        c = OptimizerConfig(Algorithm.ADAM, eta=0.1, beta1=0.9, beta2=0.999, epsilon=0.0)
        s = run(c, [0.0], [[1.0], [3.0]])
        m = 0.9 * 0.1 + 0.1 * 3.0
        v = 0.999 * 0.001 + 0.001 * 9.0
        step2 = 0.1 * (m / (1 - 0.81)) / math.sqrt(v / (1 - 0.999**2))
        assert s.w[0] == pytest.approx(-0.1 - step2, abs=1e-14)


class TestAdaBound:
    def test_bounds_schedule(self):
        c = OptimizerConfig(Algorithm.ADABOUND, adabound_final_lr=0.1, adabound_gamma=1e-3)
        lo, hi = adabound_bounds(c, 1)
        assert lo == pytest.approx(0.1 * (1 - 1 / 1.001))
        assert hi == pytest.approx(0.1 * (1 + 1000.0))

    def test_bounds_tighten_to_final_lr(self):
        c = OptimizerConfig(Algorithm.ADABOUND)
        lo, hi = adabound_bounds(c, 10**9)
        assert lo == pytest.approx(0.1, rel=1e-5) and hi == pytest.approx(0.1, rel=1e-5)

    def test_pinned_bounds_give_sgd_like_step(self):
        c = OptimizerConfig(Algorithm.ADABOUND, eta=0.5)
        s = step(OptimizerState([1.0, -1.0]), c, [0.3, -2.0], bounds=(0.05, 0.05))
        # first step: m_hat == grad
        assert np.allclose(s.w, [1.0 - 0.05 * 0.3, -1.0 + 0.05 * 2.0], atol=1e-15)


class TestProperties:
    @pytest.mark.parametrize("alg", [a for a in ALL if a is not Algorithm.ADAMW])
    def test_zero_gradient_fixed_point(self, alg):
        s = step(OptimizerState([0.7, -1.2]), OptimizerConfig(alg), [0.0, 0.0])
        assert np.array_equal(s.w, [0.7, -1.2])

    def test_zero_gradient_adamw_only_decays(self):
        c = OptimizerConfig(Algorithm.ADAMW, eta=0.1, weight_decay=1e-4)
        s = step(OptimizerState([0.7]), c, [0.0])
        assert s.w[0] == pytest.approx(0.7 * (1 - 1e-5), abs=1e-15)
        assert np.array_equal(step(OptimizerState([0.7]), c.with_(weight_decay=0.0), [0.0]).w, [0.7])

    @pytest.mark.parametrize("alg", ALL)
    def test_k_increments(self, alg):
        s = run(OptimizerConfig(alg), [0.0], [[1.0]] * 3)
        assert s.k == 3

    @pytest.mark.parametrize("alg", ALL)
    def test_shape_mismatch(self, alg):
        with pytest.raises(InvalidParameterError):
            step(OptimizerState([0.0, 0.0]), OptimizerConfig(alg), [1.0])

    @pytest.mark.parametrize("bad", [np.nan, np.inf])
    def test_non_finite_gradient(self, bad):
        with pytest.raises(NonFiniteInputError):
            step(OptimizerState([0.0]), OptimizerConfig(), [bad])

    def test_step_is_pure(self):
        s = OptimizerState([1.0])
        step(s, OptimizerConfig(Algorithm.ADAM), [1.0])
        assert s.w[0] == 1.0 and s.m[0] == 0.0 and s.k == 0

    @pytest.mark.parametrize("alg", [Algorithm.RMSPROP, Algorithm.ADAM])
    def test_first_step_bound(self, alg):
        rng = np.random.default_rng(0)
        c = OptimizerConfig(alg, eta=0.05)
        for _ in range(200):
            g = rng.normal(size=4) * 10 ** rng.uniform(-4, 4)
            dw = step(OptimizerState(np.zeros(4)), c, g).w
            assert np.all(np.abs(dw) <= c.eta / math.sqrt(1 - c.gamma) + c.eta)

    @pytest.mark.parametrize("alg", ADAPTIVE)
    def test_v_non_negative(self, alg):
        rng = np.random.default_rng(3)
        c = OptimizerConfig(alg, eta=1e-3)
        s = OptimizerState(np.zeros(3))
        grads = rng.normal(size=(100_000, 3)) * 5
        for g in grads:
            s = step(s, c, g)
            if s.v.min() < 0:
                pytest.fail("negative second moment")

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(1e-150, 1e3) | st.floats(-1e3, -1e-150) | st.just(0.0), min_size=1, max_size=5),
           st.floats(1e-4, 1.0))
    def test_adam_first_step_is_eta_sign(self, g, eta):
        # magnitudes stay above 1e-150 so that g**2 does not underflow to zero
        g = np.array(g)
        s = step(OptimizerState(np.zeros_like(g)), OptimizerConfig(Algorithm.ADAM, eta=eta, epsilon=0.0), g)
        assert np.allclose(s.w, -eta * np.sign(g), rtol=1e-12, atol=0.0)


class TestDeterministicConvergence:
    """Full-gradient descent on L(w) = w**2 / 2 from w0 = 1."""

    @pytest.mark.parametrize("eta", [0.1, 0.01, 0.001])
    @pytest.mark.parametrize("alg", [a for a in ALL if a is not Algorithm.RMSPROP])
    def test_reaches_1e3(self, alg, eta):
        c = OptimizerConfig(alg, eta=eta)
        s = OptimizerState([1.0])
        for _ in range(10_000):
            s = step(s, c, s.w)
        assert abs(s.w[0]) < 1e-3

    @pytest.mark.parametrize("eta", [0.1, 0.01])
    def test_rmsprop_settles_on_two_cycle(self, eta):
        # with v tracking w**2, every step has length ~eta, so the iterate
        # ends up alternating between +eta/2 and -eta/2
        c = OptimizerConfig(Algorithm.RMSPROP, eta=eta)
        s = OptimizerState([1.0])
        tail = []
        for k in range(10_000):
            s = step(s, c, s.w)
            if k >= 9_990:
                tail.append(s.w[0])
        tail = np.array(tail)
        assert np.allclose(np.abs(tail), eta / 2, rtol=1e-3)
        assert np.all(np.sign(tail[1:]) == -np.sign(tail[:-1]))


class TestEffectiveRate:
    def test_unit_second_moment(self):
        s = OptimizerState([0.0, 0.0], v=[1.0, 1.0])
        assert np.allclose(effective_rate(s, OptimizerConfig(Algorithm.RMSPROP, eta=0.1, epsilon=0.0)), 0.1)

    def test_v4(self):
        s = OptimizerState([0.0], v=[4.0])
        assert effective_rate(s, OptimizerConfig(Algorithm.RMSPROP, eta=0.1, epsilon=0.0))[0] == pytest.approx(0.05)

    @pytest.mark.parametrize("alg", [Algorithm.SGD, Algorithm.SGD_MOMENTUM])
    def test_unsupported(self, alg):
        with pytest.raises(UnsupportedAlgorithmError):
            effective_rate(OptimizerState([0.0]), OptimizerConfig(alg))
