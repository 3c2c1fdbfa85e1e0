"""
Forward and backward kernels for the CIDIS layer vocabulary.

Every forward function returns ``(output, cache)``; the matching backward consumes the cache.
Kernels preserve the dtype of their inputs, so the same code runs in ``float32`` for training and
in ``float64`` for gradient checks.

Convolution is evaluated one kernel offset at a time: for each ``(ky, kx)`` the strided view of
the padded input is contracted with ``kernel[:, :, ky, kx]``. This is the column expansion of
im2col without materializing the column matrix.
"""

from typing import NamedTuple, Optional, Tuple

import numpy as np

from ..common.rng import Rng
from ..common.types import Mode
from ..errors import ContractError, InvalidRateError, LabelError, ShapeError


def _require(cache, kind: type, name: str):
    if not isinstance(cache, kind):
        raise ContractError(f"{name} backward called without a matching forward cache")
    return cache


def _check_grad(grad_out: np.ndarray, shape: Tuple[int, ...], name: str) -> None:
    if tuple(grad_out.shape) != tuple(shape):
        raise ContractError(f"{name} backward: gradient shape {grad_out.shape} does not match forward output {shape}")


def output_extent(size: int, window: int, stride: int, padding: int = 0) -> int:
    """
    Spatial output extent of a sliding window.

    >>> output_extent(224, 3, 1, 1), output_extent(224, 2, 2)
    (224, 112)
    """
    return (size + 2 * padding - window) // stride + 1


# --- convolution ---


class ConvCache(NamedTuple):
    padded: np.ndarray
    kernel: np.ndarray
    stride: int
    padding: int
    x_shape: Tuple[int, ...]
    out_shape: Tuple[int, ...]


def conv2d_forward(
    x: np.ndarray, kernel: np.ndarray, bias: np.ndarray, stride: int = 1, padding: int = 0
) -> Tuple[np.ndarray, ConvCache]:
    """
    2-D cross-correlation of ``x[b, ci, h, w]`` with ``kernel[co, ci, kh, kw]`` plus ``bias[co]``.

    Raises:
        ShapeError: On channel mismatch, a kernel larger than the padded input, or bad stride/padding
    """
    if x.ndim != 4 or kernel.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D input and kernel, got {x.shape} and {kernel.shape}")
    b, ci, h, w = x.shape
    co, kci, kh, kw = kernel.shape
    if ci != kci:
        raise ShapeError(f"conv2d channel mismatch: input has {ci}, kernel expects {kci}")
    if bias.shape != (co,):
        raise ShapeError(f"conv2d bias must have shape ({co},), got {bias.shape}")
    if stride < 1 or padding < 0:
        raise ShapeError(f"conv2d needs stride >= 1 and padding >= 0, got {stride}, {padding}")
    if h + 2 * padding < kh or w + 2 * padding < kw:
        raise ShapeError(f"conv2d kernel {kh}x{kw} exceeds padded input {h}x{w} (padding {padding})")

    oh, ow = output_extent(h, kh, stride, padding), output_extent(w, kw, stride, padding)
    padded = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x
    out = np.zeros((b, oh, ow, co), dtype=np.result_type(x, kernel))
    for ky in range(kh):
        for kx in range(kw):
            view = padded[:, :, ky : ky + stride * oh : stride, kx : kx + stride * ow : stride]
            out += np.tensordot(view, kernel[:, :, ky, kx], axes=([1], [1]))
    out = np.ascontiguousarray(out.transpose(0, 3, 1, 2)) + bias.reshape(1, co, 1, 1)
    return out, ConvCache(padded, kernel, stride, padding, x.shape, out.shape)


def conv2d_backward(grad_out: np.ndarray, cache: ConvCache) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients ``(grad_x, grad_kernel, grad_bias)`` of a :func:`conv2d_forward` call."""
    cache = _require(cache, ConvCache, "conv2d")
    _check_grad(grad_out, cache.out_shape, "conv2d")
    _, _, kh, kw = cache.kernel.shape
    _, _, oh, ow = cache.out_shape
    _, _, h, w = cache.x_shape
    s, p = cache.stride, cache.padding

    grad_padded = np.zeros_like(cache.padded)
    grad_kernel = np.zeros_like(cache.kernel)
    for ky in range(kh):
        for kx in range(kw):
            rows = slice(ky, ky + s * oh, s)
            cols = slice(kx, kx + s * ow, s)
            view = cache.padded[:, :, rows, cols]
            grad_kernel[:, :, ky, kx] = np.tensordot(grad_out, view, axes=([0, 2, 3], [0, 2, 3]))
            spread = np.tensordot(grad_out, cache.kernel[:, :, ky, kx], axes=([1], [0]))
            grad_padded[:, :, rows, cols] += spread.transpose(0, 3, 1, 2)
    grad_x = grad_padded[:, :, p : p + h, p : p + w] if p else grad_padded
    grad_bias = grad_out.sum(axis=(0, 2, 3))
    return np.ascontiguousarray(grad_x), grad_kernel, grad_bias


# --- relu ---


class ReluCache(NamedTuple):
    mask: np.ndarray


def relu_forward(x: np.ndarray) -> Tuple[np.ndarray, ReluCache]:
    """
    Element-wise ``max(x, 0)``.

    >>> relu_forward(np.array([-1.0, 0.0, 2.0]))[0].tolist()
    [0.0, 0.0, 2.0]
    """
    mask = x > 0
    return np.where(mask, x, np.zeros((), dtype=x.dtype)), ReluCache(mask)


def relu_backward(grad_out: np.ndarray, cache: ReluCache) -> np.ndarray:
    """Pass the gradient through where the input was positive."""
    cache = _require(cache, ReluCache, "relu")
    _check_grad(grad_out, cache.mask.shape, "relu")
    return np.where(cache.mask, grad_out, np.zeros((), dtype=grad_out.dtype))


# --- max pooling ---


class PoolCache(NamedTuple):
    argmax: np.ndarray
    window: int
    stride: int
    x_shape: Tuple[int, ...]


def maxpool2d_forward(x: np.ndarray, window: int = 2, stride: int = 2) -> Tuple[np.ndarray, PoolCache]:
    """
    Per-window maximum; ties resolve to the first position in row-major window order.

    >>> maxpool2d_forward(np.array([[[[1.0, 2.0], [3.0, 4.0]]]]))[0].tolist()
    [[[[4.0]]]]
    """
    if x.ndim != 4:
        raise ShapeError(f"maxpool2d expects 4-D input, got {x.shape}")
    if window < 1 or stride < 1:
        raise ShapeError(f"maxpool2d needs window and stride >= 1, got {window}, {stride}")
    b, c, h, w = x.shape
    if window > h or window > w:
        raise ShapeError(f"maxpool2d window {window} exceeds spatial extent {h}x{w}")
    oh, ow = output_extent(h, window, stride), output_extent(w, window, stride)
    candidates = np.stack(
        [
            x[:, :, ky : ky + stride * oh : stride, kx : kx + stride * ow : stride]
            for ky in range(window)
            for kx in range(window)
        ]
    )
    argmax = candidates.argmax(axis=0)
    out = np.take_along_axis(candidates, argmax[None], axis=0)[0]
    return out, PoolCache(argmax, window, stride, (b, c, h, w))


def maxpool2d_backward(grad_out: np.ndarray, cache: PoolCache) -> np.ndarray:
    """Route each output gradient to the position that produced the maximum."""
    cache = _require(cache, PoolCache, "maxpool2d")
    _check_grad(grad_out, cache.argmax.shape, "maxpool2d")
    _, _, oh, ow = grad_out.shape
    s = cache.stride
    grad_x = np.zeros(cache.x_shape, dtype=grad_out.dtype)
    zero = np.zeros((), dtype=grad_out.dtype)
    for position in range(cache.window * cache.window):
        ky, kx = divmod(position, cache.window)
        grad_x[:, :, ky : ky + s * oh : s, kx : kx + s * ow : s] += np.where(cache.argmax == position, grad_out, zero)
    return grad_x


# --- flatten ---


class FlattenCache(NamedTuple):
    x_shape: Tuple[int, ...]


def flatten_forward(x: np.ndarray) -> Tuple[np.ndarray, FlattenCache]:
    """Collapse all but the batch axis."""
    return x.reshape(x.shape[0], -1), FlattenCache(x.shape)


def flatten_backward(grad_out: np.ndarray, cache: FlattenCache) -> np.ndarray:
    """Restore the pre-flatten shape."""
    cache = _require(cache, FlattenCache, "flatten")
    _check_grad(grad_out, (cache.x_shape[0], int(np.prod(cache.x_shape[1:]))), "flatten")
    return grad_out.reshape(cache.x_shape)


# --- dense ---


class DenseCache(NamedTuple):
    x: np.ndarray
    weight: np.ndarray


def dense_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> Tuple[np.ndarray, DenseCache]:
    """
    Affine map ``y = x @ weight.T + bias``.

    >>> dense_forward(np.array([[1.0, 2.0]]), np.array([[1.0, 1.0], [0.0, 1.0]]), np.zeros(2))[0].tolist()
    [[3.0, 2.0]]
    """
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeError(f"dense input {x.shape} does not match weight {weight.shape}")
    if bias.shape != (weight.shape[0],):
        raise ShapeError(f"dense bias must have shape ({weight.shape[0]},), got {bias.shape}")
    return x @ weight.T + bias, DenseCache(x, weight)


def dense_backward(grad_out: np.ndarray, cache: DenseCache) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients ``(grad_x, grad_weight, grad_bias)``."""
    cache = _require(cache, DenseCache, "dense")
    _check_grad(grad_out, (cache.x.shape[0], cache.weight.shape[0]), "dense")
    return grad_out @ cache.weight, grad_out.T @ cache.x, grad_out.sum(axis=0)


# --- dropout ---


class DropoutCache(NamedTuple):
    mask: Optional[np.ndarray]
    shape: Tuple[int, ...]


def check_rate(p: float) -> float:
    """Validate a dropout rate."""
    if not 0.0 <= p < 1.0:
        raise InvalidRateError(f"Dropout rate must be in [0, 1), got {p}")
    return float(p)


def dropout_forward(x: np.ndarray, p: float, mode: Mode, rng: Optional[Rng]) -> Tuple[np.ndarray, DropoutCache]:
    """
    Inverted dropout: in train mode zero each element with probability ``p`` and scale survivors
    by ``1 / (1 - p)``; identity in eval mode.
    """
    p = check_rate(p)
    if Mode(mode) is Mode.EVAL or p == 0.0:
        return x, DropoutCache(None, x.shape)
    if rng is None:
        raise ContractError("dropout in train mode needs an rng")
    keep = rng.random(x.shape, dtype=np.float64) >= p
    mask = keep.astype(x.dtype) / x.dtype.type(1.0 - p)
    return x * mask, DropoutCache(mask, x.shape)


def dropout_backward(grad_out: np.ndarray, cache: DropoutCache) -> np.ndarray:
    """Apply the cached mask (identity when the forward pass was)."""
    cache = _require(cache, DropoutCache, "dropout")
    _check_grad(grad_out, cache.shape, "dropout")
    return grad_out if cache.mask is None else grad_out * cache.mask


# --- loss ---


def softmax_xent(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Softmax cross-entropy averaged over the batch.

    Returns:
        ``(loss, probs, grad_logits)`` where ``grad_logits = (probs - one_hot) / b``

    >>> round(softmax_xent(np.zeros((1, 4)), np.array([2]))[0], 6)
    1.386294
    """
    if logits.ndim != 2:
        raise ShapeError(f"softmax_xent expects [b, classes] logits, got {logits.shape}")
    b, k = logits.shape
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.shape[0] != b:
        raise ShapeError(f"{labels.shape[0]} labels for a batch of {b}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise LabelError(f"Labels must be in 0..{k - 1}, got {sorted(set(labels.tolist()))}")
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    probs = exp / total
    rows = np.arange(b)
    log_likelihood = shifted[rows, labels] - np.log(total[:, 0])
    loss = float(-log_likelihood.mean())
    grad = probs.copy()
    grad[rows, labels] -= 1
    return loss, probs, grad / grad.dtype.type(b)
