"""
Layer kernels against direct loop implementations and 64-bit finite differences.
"""

import numpy as np
import pytest

from ripeness.common.rng import Rng
from ripeness.common.types import Mode
from ripeness.errors import ContractError, InvalidRateError, LabelError, ShapeError
from ripeness.nn import functional as F
from ripeness.nn import layers as L
from ripeness.nn.gradcheck import numerical_gradient, relative_error

TOLERANCE = 1e-3


def naive_conv(x, kernel, bias, stride, padding):
    b, ci, h, w = x.shape
    co, _, kh, kw = kernel.shape
    padded = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((b, co, oh, ow))
    for n in range(b):
        for o in range(co):
            for i in range(oh):
                for j in range(ow):
                    patch = padded[n, :, i * stride : i * stride + kh, j * stride : j * stride + kw]
                    out[n, o, i, j] = (patch * kernel[o]).sum() + bias[o]
    return out


@pytest.fixture
def gen():
    return np.random.default_rng(1234)


class TestConvolution:
    def test_all_ones(self):
        out, _ = F.conv2d_forward(np.ones((1, 1, 3, 3)), np.ones((1, 1, 2, 2)), np.zeros(1))
        assert out.tolist() == [[[[4.0, 4.0], [4.0, 4.0]]]]

    @pytest.mark.parametrize("stride,padding", [(1, 0), (1, 1), (2, 1), (2, 0)])
    def test_matches_loops(self, gen, stride, padding):
        x = gen.normal(size=(2, 3, 7, 6))
        kernel = gen.normal(size=(4, 3, 3, 3))
        bias = gen.normal(size=4)
        out, _ = F.conv2d_forward(x, kernel, bias, stride, padding)
        assert np.allclose(out, naive_conv(x, kernel, bias, stride, padding), atol=1e-10)

    def test_gradients(self, gen):
        x = gen.normal(size=(2, 2, 5, 5))
        kernel = gen.normal(size=(3, 2, 3, 3))
        bias = gen.normal(size=3)

        def loss():
            return float(F.conv2d_forward(x, kernel, bias, 1, 1)[0].sum())

        out, cache = F.conv2d_forward(x, kernel, bias, 1, 1)
        grad_x, grad_k, grad_b = F.conv2d_backward(np.ones_like(out), cache)
        assert relative_error(grad_x, numerical_gradient(loss, x)) < TOLERANCE
        assert relative_error(grad_k, numerical_gradient(loss, kernel)) < TOLERANCE
        assert relative_error(grad_b, numerical_gradient(loss, bias)) < TOLERANCE

    def test_strided_gradients(self, gen):
        x = gen.normal(size=(1, 2, 6, 6))
        kernel = gen.normal(size=(2, 2, 3, 3))
        bias = np.zeros(2)
        weights = gen.normal(size=(1, 2, 3, 3))

        def loss():
            return float((F.conv2d_forward(x, kernel, bias, 2, 1)[0] * weights).sum())

        _, cache = F.conv2d_forward(x, kernel, bias, 2, 1)
        grad_x, grad_k, _ = F.conv2d_backward(weights, cache)
        assert relative_error(grad_x, numerical_gradient(loss, x)) < TOLERANCE
        assert relative_error(grad_k, numerical_gradient(loss, kernel)) < TOLERANCE

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            F.conv2d_forward(np.ones((1, 2, 4, 4)), np.ones((1, 3, 3, 3)), np.zeros(1))

    def test_kernel_larger_than_input(self):
        with pytest.raises(ShapeError):
            F.conv2d_forward(np.ones((1, 1, 2, 2)), np.ones((1, 1, 3, 3)), np.zeros(1))

    def test_backward_rejects_wrong_gradient(self):
        _, cache = F.conv2d_forward(np.ones((1, 1, 3, 3)), np.ones((1, 1, 2, 2)), np.zeros(1))
        with pytest.raises(ContractError):
            F.conv2d_backward(np.ones((1, 1, 3, 3)), cache)

    def test_backward_without_forward(self):
        with pytest.raises(ContractError):
            F.conv2d_backward(np.ones((1, 1, 2, 2)), None)


class TestPooling:
    def test_gradient_routes_to_maximum(self):
        x = np.array([[[[1.0, 5.0], [2.0, 3.0]]]])
        out, cache = F.maxpool2d_forward(x)
        assert out.item() == 5.0
        assert F.maxpool2d_backward(np.ones_like(out), cache).tolist() == [[[[0.0, 1.0], [0.0, 0.0]]]]

    def test_ties_take_first_position(self):
        out, cache = F.maxpool2d_forward(np.ones((1, 1, 2, 2)))
        assert F.maxpool2d_backward(out, cache).tolist() == [[[[1.0, 0.0], [0.0, 0.0]]]]

    def test_gradients_with_unique_maxima(self, gen):
        x = gen.permutation(64).astype(np.float64).reshape(1, 4, 4, 4)
        weights = gen.normal(size=(1, 4, 2, 2))

        def loss():
            return float((F.maxpool2d_forward(x)[0] * weights).sum())

        _, cache = F.maxpool2d_forward(x)
        grad = F.maxpool2d_backward(weights, cache)
        assert relative_error(grad, numerical_gradient(loss, x, step=1e-3)) < TOLERANCE

    def test_odd_extent_drops_last_row(self):
        out, _ = F.maxpool2d_forward(np.ones((1, 1, 5, 5)))
        assert out.shape == (1, 1, 2, 2)


class TestPointwise:
    def test_relu_gradient(self, gen):
        x = gen.normal(size=(3, 7))
        x[np.abs(x) < 0.05] = 0.5
        _, cache = F.relu_forward(x)
        weights = gen.normal(size=x.shape)

        def loss():
            return float((F.relu_forward(x)[0] * weights).sum())

        assert relative_error(F.relu_backward(weights, cache), numerical_gradient(loss, x)) < 1e-4

    def test_dense_gradients(self, gen):
        x, w, b = gen.normal(size=(4, 5)), gen.normal(size=(3, 5)), gen.normal(size=3)
        weights = gen.normal(size=(4, 3))

        def loss():
            return float((F.dense_forward(x, w, b)[0] * weights).sum())

        _, cache = F.dense_forward(x, w, b)
        grad_x, grad_w, grad_b = F.dense_backward(weights, cache)
        assert relative_error(grad_x, numerical_gradient(loss, x)) < TOLERANCE
        assert relative_error(grad_w, numerical_gradient(loss, w)) < TOLERANCE
        assert relative_error(grad_b, numerical_gradient(loss, b)) < TOLERANCE

    def test_flatten_round_trip(self):
        x = np.arange(24.0).reshape(2, 3, 2, 2)
        y, cache = F.flatten_forward(x)
        assert y.shape == (2, 12)
        assert np.array_equal(F.flatten_backward(y, cache), x)


class TestDropout:
    def test_eval_is_identity(self):
        x = np.ones((4, 10), dtype=np.float32)
        y, _ = F.dropout_forward(x, 0.5, Mode.EVAL, None)
        assert y is x

    def test_train_scales_survivors(self):
        x = np.ones((200, 50), dtype=np.float32)
        y, cache = F.dropout_forward(x, 0.2, Mode.TRAIN, Rng(7))
        assert set(np.unique(y).tolist()) <= {0.0, 1.25}
        assert abs(float((y == 0).mean()) - 0.2) < 0.02
        assert np.array_equal(F.dropout_backward(np.ones_like(x), cache), cache.mask)

    def test_same_stream_same_mask(self):
        x = np.ones((8, 8), dtype=np.float32)
        a, _ = F.dropout_forward(x, 0.3, Mode.TRAIN, Rng(1).spawn(4))
        b, _ = F.dropout_forward(x, 0.3, Mode.TRAIN, Rng(1).spawn(4))
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("p", [-0.1, 1.0, 1.5])
    def test_invalid_rate(self, p):
        with pytest.raises(InvalidRateError):
            L.dropout("d", p)

    def test_train_mode_needs_stream(self):
        with pytest.raises(ContractError):
            F.dropout_forward(np.ones((2, 2)), 0.5, Mode.TRAIN, None)


class TestSoftmaxCrossEntropy:
    def test_uniform_logits(self):
        loss, probs, _ = F.softmax_xent(np.zeros((2, 4)), np.array([0, 3]))
        assert loss == pytest.approx(np.log(4))
        assert np.allclose(probs, 0.25)

    def test_large_logits_are_stable(self):
        loss, probs, _ = F.softmax_xent(np.array([[1000.0, 0.0, 0.0, 0.0]]), np.array([0]))
        assert np.isfinite(loss)
        assert np.isfinite(probs).all()

    def test_gradient(self, gen):
        logits = gen.normal(size=(5, 4))
        labels = np.array([0, 1, 2, 3, 1])

        def loss():
            return F.softmax_xent(logits, labels)[0]

        _, _, grad = F.softmax_xent(logits, labels)
        assert relative_error(grad, numerical_gradient(loss, logits)) < 1e-4

    def test_label_out_of_range(self):
        with pytest.raises(LabelError):
            F.softmax_xent(np.zeros((1, 4)), np.array([4]))


INSTANCES = range(20)


def weighted(output_fn, weights):
    """Scalar loss ``sum(weights * output)`` so every output element gets its own upstream gradient."""
    return lambda: float((output_fn() * weights).sum())


class TestRandomGradientChecks:
    """Analytic backward passes against 64-bit central differences on seeded random instances."""

    @pytest.mark.parametrize("seed", INSTANCES)
    def test_conv(self, seed):
        gen = np.random.default_rng(seed)
        b, ci, co = (int(v) for v in gen.integers(1, 4, 3))
        h, w = (int(v) for v in gen.integers(3, 7, 2))
        k, stride, padding = int(gen.integers(1, 4)), int(gen.integers(1, 3)), int(gen.integers(0, 2))
        x, kernel, bias = gen.normal(size=(b, ci, h, w)), gen.normal(size=(co, ci, k, k)), gen.normal(size=co)
        out, cache = F.conv2d_forward(x, kernel, bias, stride, padding)
        weights = gen.normal(size=out.shape)
        loss = weighted(lambda: F.conv2d_forward(x, kernel, bias, stride, padding)[0], weights)

        grad_x, grad_k, grad_b = F.conv2d_backward(weights, cache)
        assert relative_error(grad_x, numerical_gradient(loss, x)) < TOLERANCE
        assert relative_error(grad_k, numerical_gradient(loss, kernel)) < TOLERANCE
        assert relative_error(grad_b, numerical_gradient(loss, bias)) < TOLERANCE

    @pytest.mark.parametrize("seed", INSTANCES)
    def test_pool(self, seed):
        gen = np.random.default_rng(seed)
        b, c = (int(v) for v in gen.integers(1, 4, 2))
        h, w = (2 * int(v) for v in gen.integers(1, 4, 2))
        # distinct integers keep every window maximum unique under the perturbation
        x = gen.permutation(b * c * h * w).astype(np.float64).reshape(b, c, h, w)
        out, cache = F.maxpool2d_forward(x)
        weights = gen.normal(size=out.shape)
        loss = weighted(lambda: F.maxpool2d_forward(x)[0], weights)

        assert relative_error(F.maxpool2d_backward(weights, cache), numerical_gradient(loss, x)) < TOLERANCE

    @pytest.mark.parametrize("seed", INSTANCES)
    def test_dense(self, seed):
        gen = np.random.default_rng(seed)
        b, n_in, n_out = (int(v) for v in gen.integers(1, 7, 3))
        x, w, bias = gen.normal(size=(b, n_in)), gen.normal(size=(n_out, n_in)), gen.normal(size=n_out)
        weights = gen.normal(size=(b, n_out))
        loss = weighted(lambda: F.dense_forward(x, w, bias)[0], weights)

        _, cache = F.dense_forward(x, w, bias)
        grad_x, grad_w, grad_b = F.dense_backward(weights, cache)
        assert relative_error(grad_x, numerical_gradient(loss, x)) < TOLERANCE
        assert relative_error(grad_w, numerical_gradient(loss, w)) < TOLERANCE
        assert relative_error(grad_b, numerical_gradient(loss, bias)) < TOLERANCE

    @pytest.mark.parametrize("seed", INSTANCES)
    def test_dropout_with_fixed_mask(self, seed):
        gen = np.random.default_rng(seed)
        x = gen.normal(size=tuple(int(v) for v in gen.integers(1, 7, 2)))
        p = float(gen.uniform(0.1, 0.7))
        _, cache = F.dropout_forward(x, p, Mode.TRAIN, Rng(seed))
        weights = gen.normal(size=x.shape)
        loss = weighted(lambda: F.dropout_forward(x, p, Mode.TRAIN, Rng(seed))[0], weights)

        assert relative_error(F.dropout_backward(weights, cache), numerical_gradient(loss, x)) < TOLERANCE

    @pytest.mark.parametrize("seed", INSTANCES)
    def test_softmax_xent(self, seed):
        gen = np.random.default_rng(seed)
        b = int(gen.integers(1, 7))
        logits = 3.0 * gen.normal(size=(b, 4))
        labels = gen.integers(0, 4, b)
        _, _, grad = F.softmax_xent(logits, labels)

        assert relative_error(grad, numerical_gradient(lambda: F.softmax_xent(logits, labels)[0], logits)) < TOLERANCE


class TestLayerState:
    def test_conv_output_shape(self):
        conv = L.conv2d("conv1", 3, 32, Rng(0))
        assert conv.output_shape((3, 224, 224)) == (32, 224, 224)
        assert conv.params["kernel"].shape == (32, 3, 3, 3)
        assert not conv.params["bias"].any()

    def test_pool_output_shape(self):
        assert L.maxpool2d("pool").output_shape((32, 224, 224)) == (32, 112, 112)

    def test_dense_rejects_wrong_width(self):
        with pytest.raises(ShapeError):
            L.dense("dense", 10, 4, Rng(0)).output_shape((11,))

    def test_backward_returns_qualified_names(self):
        layer = L.dense("dense1", 3, 2, Rng(0))
        y = layer.forward(np.ones((1, 3), dtype=np.float32))
        _, grads = layer.backward(np.ones_like(y))
        assert sorted(grads) == ["dense1.bias", "dense1.weight"]

    def test_loss_head_has_no_forward(self):
        with pytest.raises(ContractError):
            L.softmax_xent().forward(np.zeros((1, 4)))
