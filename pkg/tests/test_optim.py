"""AdamW update rule, decay gating, and the Glorot initializer."""

import numpy as np
import pytest

from epivsr.engine import AdamW, ParamStore, adamw_step, glorot_fans, glorot_uniform_init


def single_param_store(value, weight_decay=True):
    store = ParamStore()
    store.add("theta", np.asarray(value, dtype=np.float32), weight_decay=weight_decay)
    return store


class TestAdamW:
    def test_hand_computed_first_step(self):
        # theta=1, g=1, lr=0.1, betas (0.9, 0.999), eps=1e-8, no decay:
        # m=0.1, v=0.001, mhat=1, vhat=1 -> theta = 1 - 0.1/(1+1e-8)
        store = single_param_store([1.0])
        opt = AdamW(store, lr=0.1, weight_decay=0.0)
        opt.step({"theta": np.array([1.0], dtype=np.float32)})
        expected = 1.0 - 0.1 * (1.0 / (1.0 + 1e-8))
        assert store["theta"].data[0] == pytest.approx(expected, abs=1e-7)

    def test_decoupled_decay_only(self):
        # zero gradient, lambda=0.1, lr=0.1: theta <- 1 - 0.1*0.1*1 = 0.99
        store = single_param_store([1.0])
        opt = AdamW(store, lr=0.1, weight_decay=0.1)
        opt.step({"theta": np.zeros(1, dtype=np.float32)})
        assert store["theta"].data[0] == pytest.approx(0.99, abs=1e-7)
        np.testing.assert_array_equal(opt.m["theta"], 0.0)
        np.testing.assert_array_equal(opt.v["theta"], 0.0)

    def test_zero_gradient_no_decay_is_identity(self):
        store = single_param_store([0.7])
        opt = AdamW(store, lr=0.1, weight_decay=0.0)
        for _ in range(3):
            adamw_step(opt, {"theta": np.zeros(1, dtype=np.float32)})
        assert store["theta"].data[0] == np.float32(0.7)

    def test_decay_skipped_when_flagged_off(self):
        store = single_param_store([1.0], weight_decay=False)
        opt = AdamW(store, lr=0.1, weight_decay=0.5)
        opt.step({"theta": np.zeros(1, dtype=np.float32)})
        assert store["theta"].data[0] == np.float32(1.0)

    def test_zero_decay_reproduces_adam_trajectory(self):
        """AdamW(lambda=0) walks the exact Adam path on a random quadratic."""
        rng = np.random.default_rng(0)
        theta0 = rng.standard_normal(6).astype(np.float32)
        scale = rng.uniform(0.5, 2.0, 6)
        store = single_param_store(theta0)
        opt = AdamW(store, lr=0.05, weight_decay=0.0)

        # independent textbook Adam in float64
        ref = theta0.astype(np.float64).copy()
        m = np.zeros(6)
        v = np.zeros(6)
        b1, b2, eps, lr = 0.9, 0.999, 1e-8, 0.05
        for t in range(1, 11):
            g64 = scale * ref
            m = b1 * m + (1 - b1) * g64
            v = b2 * v + (1 - b2) * g64 * g64
            mhat = m / (1 - b1**t)
            vhat = v / (1 - b2**t)
            ref = ref - lr * mhat / (np.sqrt(vhat) + eps)

            g32 = (scale * store["theta"].data.astype(np.float64)).astype(np.float32)
            opt.step({"theta": g32})
        np.testing.assert_allclose(store["theta"].data, ref.astype(np.float32), atol=1e-6)

    def test_gradient_shape_mismatch_rejected(self):
        store = single_param_store([1.0, 2.0])
        opt = AdamW(store, lr=0.1)
        with pytest.raises(ValueError):
            opt.step({"theta": np.zeros(3, dtype=np.float32)})

    def test_missing_gradient_rejected(self):
        store = single_param_store([1.0])
        opt = AdamW(store, lr=0.1)
        with pytest.raises(ValueError):
            opt.step({})


class TestGlorotInit:
    def test_conv_kernel_bound(self):
        # receptive field 27, 64 channels each way: sqrt(6/3456) = 1/24
        fan_in, fan_out = glorot_fans((3, 3, 3, 64, 64))
        assert fan_in == 27 * 64 and fan_out == 27 * 64
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        assert bound == pytest.approx(1.0 / 24.0)
        rng = np.random.default_rng(0)
        sample = glorot_uniform_init((3, 3, 3, 64, 64), rng)
        assert np.abs(sample).max() <= bound

    def test_dense_fans(self):
        assert glorot_fans((10, 4)) == (10, 4)

    def test_sample_mean_near_zero(self):
        rng = np.random.default_rng(1)
        sample = glorot_uniform_init((3, 3, 3, 16, 16), rng).astype(np.float64)
        bound = np.sqrt(6.0 / (2 * 27 * 16))
        sigma = bound / np.sqrt(3.0)  # stdev of U(-bound, bound)
        assert abs(sample.mean()) < 3.0 * sigma / np.sqrt(sample.size)

    def test_deterministic_given_seed(self):
        a = glorot_uniform_init((4, 4), np.random.default_rng(7))
        b = glorot_uniform_init((4, 4), np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)

    def test_empty_shape_rejected(self):
        with pytest.raises(ValueError):
            glorot_uniform_init((), np.random.default_rng(0))
