import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skilleval.exc import ChannelMismatch, InvalidConfig, ShapeMismatch
from skilleval.nn.layers import (
    KERNEL_SIZE,
    Conv1dParams,
    conv1d_backward,
    conv1d_forward,
    gap,
    glorot_bound,
    glorot_uniform_init,
    relu,
    relu_backward,
    softmax,
)
from skilleval.util import make_rng


def naive_conv(x: np.ndarray, kernels: np.ndarray, biases: np.ndarray) -> np.ndarray:
    out_channels, in_channels, width = kernels.shape
    length = x.shape[1]
    out = np.zeros((out_channels, length))
    for o in range(out_channels):
        for t in range(length):
            total = biases[o]
            for c in range(in_channels):
                for k in range(width):
                    s = t + k - 1
                    if 0 <= s < length:
                        total += kernels[o, c, k] * x[c, s]

            out[o, t] = total

    return out


class TestConvolution:
    def test_matches_naive_oracle(self):
        rng = make_rng(5)
        x = rng.standard_normal((5, 11))
        params = Conv1dParams(rng.standard_normal((4, 5, 3)), rng.standard_normal(4))

        npt.assert_allclose(
            conv1d_forward(x, params), naive_conv(x, params.kernels, params.biases), atol=1e-12
        )

    @settings(max_examples=50, deadline=None)
    @given(
        seed=st.integers(0, 2 ** 32 - 1),
        in_channels=st.integers(1, 9),
        out_channels=st.integers(1, 8),
        length=st.integers(1, 15),
    )
    def test_random_shapes(self, seed, in_channels, out_channels, length):
        rng = make_rng(seed)
        x = rng.standard_normal((in_channels, length))
        params = Conv1dParams(
            rng.standard_normal((out_channels, in_channels, KERNEL_SIZE)),
            rng.standard_normal(out_channels),
        )

        npt.assert_allclose(
            conv1d_forward(x, params), naive_conv(x, params.kernels, params.biases), atol=1e-12
        )

    def test_identity_kernel(self):
        x = np.arange(12, dtype=np.float64).reshape(2, 6)
        kernels = np.zeros((2, 2, 3))
        kernels[0, 0, 1] = kernels[1, 1, 1] = 1.0

        npt.assert_array_equal(conv1d_forward(x, Conv1dParams(kernels, np.zeros(2))), x)

    def test_zero_padding_at_edges(self):
        x = np.ones((1, 4))
        kernels = np.ones((1, 1, 3))

        out = conv1d_forward(x, Conv1dParams(kernels, np.zeros(1)))
        npt.assert_array_equal(out, [[2.0, 3.0, 3.0, 2.0]])

    def test_channel_mismatch(self):
        with pytest.raises(ChannelMismatch):
            conv1d_forward(np.zeros((3, 5)), Conv1dParams.zeros(4, 2))

    def test_bad_kernel_shape(self):
        with pytest.raises(ShapeMismatch):
            Conv1dParams(np.zeros((2, 3, 5)), np.zeros(2))

        with pytest.raises(ShapeMismatch):
            Conv1dParams(np.zeros((2, 3, 3)), np.zeros(3))

    def test_backward_is_the_adjoint(self):
        # <conv(x), g> is linear in x and W, so the gradients are exact adjoints
        rng = make_rng(11)
        x = rng.standard_normal((3, 9))
        params = Conv1dParams(rng.standard_normal((2, 3, 3)), rng.standard_normal(2))
        grad_out = rng.standard_normal((2, 9))

        grad_x, grad_k, grad_b = conv1d_backward(x, params, grad_out)

        dx = rng.standard_normal(x.shape)
        zero_bias = Conv1dParams(params.kernels, np.zeros(2))
        assert np.sum(conv1d_forward(dx, zero_bias) * grad_out) == pytest.approx(
            np.sum(grad_x * dx), abs=1e-12
        )

        dk = rng.standard_normal(params.kernels.shape)
        assert np.sum(conv1d_forward(x, Conv1dParams(dk, np.zeros(2))) * grad_out) == pytest.approx(
            np.sum(grad_k * dk), abs=1e-12
        )
        npt.assert_allclose(grad_b, grad_out.sum(axis=1))

    def test_skip_input_grad(self):
        rng = make_rng(2)
        params = Conv1dParams.glorot(3, 2, rng)
        grad_x, _, _ = conv1d_backward(
            rng.standard_normal((3, 5)), params, np.ones((2, 5)), need_input_grad=False
        )
        assert grad_x is None


class TestGlorot:
    def test_bound(self):
        # 3 input channels and 8 filters, both fans scaled by the kernel length
        assert glorot_bound(3 * KERNEL_SIZE, 8 * KERNEL_SIZE) == pytest.approx(np.sqrt(6 / 33))

    def test_draws_lie_within_bound(self):
        params = Conv1dParams.glorot(3, 8, make_rng(0))
        bound = np.sqrt(6 / 33)

        assert params.kernels.shape == (8, 3, 3)
        assert np.all(np.abs(params.kernels) <= bound)
        npt.assert_array_equal(params.biases, 0.0)

    def test_sample_mean(self):
        bound = glorot_bound(10, 20)
        draws = glorot_uniform_init(10, 20, make_rng(3), size=100_000)

        assert abs(draws.mean()) < 3 * bound / np.sqrt(3 * 100_000)

    def test_invalid_fans(self):
        with pytest.raises(InvalidConfig):
            glorot_uniform_init(0, 3, make_rng(0))


class TestActivations:
    def test_relu(self):
        x = np.array([[-2.0, 0.0, 3.5], [1e-300, -1e-300, 7.0]])
        npt.assert_array_equal(relu(x), np.maximum(x, 0.0))

    def test_relu_subgradient_at_zero(self):
        activated = np.array([0.0, 1.0, 0.0, 2.0])
        npt.assert_array_equal(relu_backward(activated, np.ones(4)), [0.0, 1.0, 0.0, 1.0])

    def test_gap(self):
        x = make_rng(4).standard_normal((6, 13))
        npt.assert_allclose(gap(x), [sum(row) / 13 for row in x], atol=1e-15)

    def test_softmax_is_stable(self):
        p = softmax(np.array([1000.0, 1000.0, 1000.0]))
        npt.assert_allclose(p, 1 / 3)

        p = softmax(np.array([-1000.0, 0.0, 1000.0]))
        assert np.all(np.isfinite(p))
        assert p.sum() == pytest.approx(1.0)

    @settings(max_examples=100, deadline=None)
    @given(
        z=st.lists(st.floats(-50.0, 50.0), min_size=1, max_size=6),
        shift=st.floats(-100.0, 100.0),
    )
    def test_softmax_is_translation_invariant(self, z, shift):
        z = np.array(z)
        p = softmax(z)

        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        npt.assert_allclose(softmax(z + shift), p, atol=1e-12)
