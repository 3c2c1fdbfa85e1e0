"""
Layer descriptors: a kind, named parameters, scalar hyperparameters and the forward cache.
"""

from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..common.rng import Rng
from ..common.tensor import glorot_uniform, zeros
from ..common.types import Mode
from ..dto.checkpoint import LayerManifestEntry
from ..errors import ContractError, ShapeError
from . import functional as F


class LayerKind(str, Enum):
    """The layer vocabulary of the CIDIS family."""

    CONV2D = "conv2d"
    RELU = "relu"
    MAXPOOL2D = "maxpool2d"
    FLATTEN = "flatten"
    DENSE = "dense"
    DROPOUT = "dropout"
    SOFTMAX_XENT = "softmax_xent"


Shape = Tuple[int, ...]


class LayerState(BaseModel):
    """
    One layer of a network.

    ``params`` holds ``kernel``/``bias`` for convolutions and ``weight``/``bias`` for dense layers.
    ``cache`` is written by :meth:`forward` and consumed by :meth:`backward`.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: LayerKind
    name: str
    params: Dict[str, np.ndarray] = Field(default_factory=dict)
    hyper: Dict[str, Union[int, float]] = Field(default_factory=dict)
    cache: Any = Field(default=None, exclude=True)

    def qualified(self, key: str) -> str:
        """Network-wide parameter name, e.g. ``conv3.kernel``."""
        return f"{self.name}.{key}"

    def output_shape(self, in_shape: Shape) -> Shape:
        """Per-sample output shape for a per-sample input shape (batch axis excluded)."""
        kind = self.kind
        if kind is LayerKind.CONV2D:
            co, ci, kh, kw = self.params["kernel"].shape
            if len(in_shape) != 3 or in_shape[0] != ci:
                raise ShapeError(f"{self.name}: expects {ci} input channels, got shape {in_shape}")
            stride, padding = int(self.hyper["stride"]), int(self.hyper["padding"])
            h = F.output_extent(in_shape[1], kh, stride, padding)
            w = F.output_extent(in_shape[2], kw, stride, padding)
            if h < 1 or w < 1:
                raise ShapeError(f"{self.name}: kernel {kh}x{kw} exceeds input {in_shape}")
            return (co, h, w)
        if kind is LayerKind.MAXPOOL2D:
            window, stride = int(self.hyper["window"]), int(self.hyper["stride"])
            if len(in_shape) != 3 or window > in_shape[1] or window > in_shape[2]:
                raise ShapeError(f"{self.name}: window {window} exceeds input {in_shape}")
            h = F.output_extent(in_shape[1], window, stride)
            w = F.output_extent(in_shape[2], window, stride)
            return (in_shape[0], h, w)
        if kind is LayerKind.FLATTEN:
            return (int(np.prod(in_shape)),)
        if kind is LayerKind.DENSE:
            out_f, in_f = self.params["weight"].shape
            if in_shape != (in_f,):
                raise ShapeError(f"{self.name}: expects {in_f} input features, got shape {in_shape}")
            return (out_f,)
        return tuple(in_shape)

    def forward(self, x: np.ndarray, mode: Mode = Mode.EVAL, rng: Optional[Rng] = None) -> np.ndarray:
        """Run the layer and keep what its backward pass needs."""
        kind = self.kind
        if kind is LayerKind.CONV2D:
            y, self.cache = F.conv2d_forward(
                x, self.params["kernel"], self.params["bias"], int(self.hyper["stride"]), int(self.hyper["padding"])
            )
        elif kind is LayerKind.RELU:
            y, self.cache = F.relu_forward(x)
        elif kind is LayerKind.MAXPOOL2D:
            y, self.cache = F.maxpool2d_forward(x, int(self.hyper["window"]), int(self.hyper["stride"]))
        elif kind is LayerKind.FLATTEN:
            y, self.cache = F.flatten_forward(x)
        elif kind is LayerKind.DENSE:
            y, self.cache = F.dense_forward(x, self.params["weight"], self.params["bias"])
        elif kind is LayerKind.DROPOUT:
            y, self.cache = F.dropout_forward(x, float(self.hyper["p"]), mode, rng)
        else:
            raise ContractError(f"{self.name}: {kind.value} is a loss head; use loss()")
        return y

    def backward(self, grad_out: np.ndarray) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        """
        Returns:
            ``(grad_input, grads)`` with ``grads`` keyed by qualified parameter name
        """
        kind = self.kind
        grads: Dict[str, np.ndarray] = {}
        if kind is LayerKind.CONV2D:
            grad_x, grads[self.qualified("kernel")], grads[self.qualified("bias")] = F.conv2d_backward(
                grad_out, self.cache
            )
        elif kind is LayerKind.RELU:
            grad_x = F.relu_backward(grad_out, self.cache)
        elif kind is LayerKind.MAXPOOL2D:
            grad_x = F.maxpool2d_backward(grad_out, self.cache)
        elif kind is LayerKind.FLATTEN:
            grad_x = F.flatten_backward(grad_out, self.cache)
        elif kind is LayerKind.DENSE:
            grad_x, grads[self.qualified("weight")], grads[self.qualified("bias")] = F.dense_backward(
                grad_out, self.cache
            )
        elif kind is LayerKind.DROPOUT:
            grad_x = F.dropout_backward(grad_out, self.cache)
        else:
            raise ContractError(f"{self.name}: {kind.value} has no input gradient of its own")
        return grad_x, grads

    def loss(self, logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        """Softmax cross-entropy of the loss head."""
        if self.kind is not LayerKind.SOFTMAX_XENT:
            raise ContractError(f"{self.name} is not a loss head")
        return F.softmax_xent(logits, labels)

    def clear(self) -> None:
        """Drop the forward cache."""
        self.cache = None

    def manifest_entry(self) -> LayerManifestEntry:
        """Kind, hyperparameters and parameter shapes (the architecture, without weights)."""
        return LayerManifestEntry(
            name=self.name,
            kind=self.kind.value,
            hyper=dict(sorted(self.hyper.items())),
            params={key: list(value.shape) for key, value in self.params.items()},
        )


# --- factories ---


def conv2d(
    name: str, in_ch: int, out_ch: int, rng: Rng, kernel: int = 3, stride: int = 1, padding: int = 1
) -> LayerState:
    """Convolution with Glorot-uniform kernel and zero bias."""
    fan_in, fan_out = in_ch * kernel * kernel, out_ch * kernel * kernel
    return LayerState(
        kind=LayerKind.CONV2D,
        name=name,
        params={
            "kernel": glorot_uniform([out_ch, in_ch, kernel, kernel], fan_in, fan_out, rng),
            "bias": zeros([out_ch]),
        },
        hyper={"stride": stride, "padding": padding},
    )


def dense(name: str, in_features: int, out_features: int, rng: Rng) -> LayerState:
    """Fully-connected layer with Glorot-uniform weight and zero bias."""
    return LayerState(
        kind=LayerKind.DENSE,
        name=name,
        params={
            "weight": glorot_uniform([out_features, in_features], in_features, out_features, rng),
            "bias": zeros([out_features]),
        },
    )


def relu(name: str) -> LayerState:
    return LayerState(kind=LayerKind.RELU, name=name)


def maxpool2d(name: str, window: int = 2, stride: int = 2) -> LayerState:
    return LayerState(kind=LayerKind.MAXPOOL2D, name=name, hyper={"window": window, "stride": stride})


def flatten(name: str) -> LayerState:
    return LayerState(kind=LayerKind.FLATTEN, name=name)


def dropout(name: str, p: float) -> LayerState:
    """Inverted dropout at rate ``p`` (validated)."""
    return LayerState(kind=LayerKind.DROPOUT, name=name, hyper={"p": F.check_rate(p)})


def softmax_xent(name: str = "loss") -> LayerState:
    return LayerState(kind=LayerKind.SOFTMAX_XENT, name=name)
