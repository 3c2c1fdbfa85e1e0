"""
Parameter-update rules: SGD, Adagrad, Adam and Nadam.

Every rule updates the parameter array in place and returns it. Adaptive rules keep their
accumulators in :attr:`OptimizerState.slots`, keyed by parameter name, created as zeros on first
use. The step counter ``t`` is advanced once per :func:`apply` call before any bias correction.
"""

from typing import Collection, Dict, Mapping, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .common.types import OptimizerKind
from .dto.configs import TrainConfig
from .errors import ContractError, InvalidRangeError, ShapeError

DEFAULT_LR = {
    OptimizerKind.SGD: 0.01,
    OptimizerKind.ADAGRAD: 0.1,
    OptimizerKind.ADAM: 0.01,
    OptimizerKind.NADAM: 0.01,
}


class OptimizerState(BaseModel):
    """Hyperparameters, step counter and per-parameter accumulators of one training run."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: OptimizerKind
    lr: float = Field(gt=0)
    eps: float = Field(default=1e-8, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    t: int = Field(default=0, ge=0)
    slots: Dict[str, Dict[str, np.ndarray]] = Field(default_factory=dict)

    @classmethod
    def create(cls, kind: OptimizerKind, lr: Optional[float] = None, **hyper) -> "OptimizerState":
        """State with the documented default learning rate when ``lr`` is omitted."""
        kind = OptimizerKind(kind)
        return cls(kind=kind, lr=DEFAULT_LR[kind] if lr is None else lr, **hyper)

    @classmethod
    def from_config(cls, config: TrainConfig) -> "OptimizerState":
        """State for a training run."""
        return cls(kind=config.optimizer, lr=config.lr, eps=config.eps, beta1=config.beta1, beta2=config.beta2)

    def advance(self) -> int:
        """Advance the step counter and return its new value."""
        self.t += 1
        return self.t

    def slot(self, name: str, key: str, like: np.ndarray) -> np.ndarray:
        """Accumulator ``key`` of parameter ``name``, zero-initialized on first use."""
        slots = self.slots.setdefault(name, {})
        if key not in slots:
            slots[key] = np.zeros_like(like)
        elif slots[key].shape != like.shape:
            raise ShapeError(f"Accumulator {name}.{key} has shape {slots[key].shape}, parameter has {like.shape}")
        return slots[key]


def _check(param: np.ndarray, grad: np.ndarray) -> None:
    if param.shape != grad.shape:
        raise ShapeError(f"Gradient shape {grad.shape} does not match parameter shape {param.shape}")


def _bias_step(state: OptimizerState) -> int:
    if state.t < 1:
        raise ContractError("Advance the optimizer step counter before an adaptive update")
    return state.t


def step_sgd(param: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
    """
    ``param <- param - lr * grad``.

    >>> float(step_sgd(np.array([1.0]), np.array([0.5]), 0.1)[0])
    0.95
    """
    _check(param, grad)
    if lr <= 0:
        raise InvalidRangeError(f"Learning rate must be positive, got {lr}")
    param -= lr * grad
    return param


def step_adagrad(param: np.ndarray, grad: np.ndarray, state: OptimizerState, name: str = "param") -> np.ndarray:
    """``G <- G + grad**2``; ``param <- param - lr * grad / (sqrt(G) + eps)``."""
    _check(param, grad)
    accumulated = state.slot(name, "G", param)
    accumulated += grad * grad
    param -= state.lr * grad / (np.sqrt(accumulated) + state.eps)
    return param


def _moments(param: np.ndarray, grad: np.ndarray, state: OptimizerState, name: str):
    m = state.slot(name, "m", param)
    v = state.slot(name, "v", param)
    m *= state.beta1
    m += (1 - state.beta1) * grad
    v *= state.beta2
    v += (1 - state.beta2) * grad * grad
    return m, v


def step_adam(param: np.ndarray, grad: np.ndarray, state: OptimizerState, name: str = "param") -> np.ndarray:
    """Adam with bias correction at the current step ``state.t``."""
    _check(param, grad)
    t = _bias_step(state)
    m, v = _moments(param, grad, state, name)
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    param -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return param


def step_nadam(param: np.ndarray, grad: np.ndarray, state: OptimizerState, name: str = "param") -> np.ndarray:
    """
    Nesterov-accelerated Adam:
    ``param <- param - lr * (beta1 * m_hat + (1 - beta1) * grad) / (sqrt(v_hat) + eps)``.

    From zero state the look-ahead term equals ``m_hat`` at ``t = 1``, so the first Nadam step is
    the first Adam step.
    """
    _check(param, grad)
    t = _bias_step(state)
    m, v = _moments(param, grad, state, name)
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    lookahead = state.beta1 * m_hat + (1 - state.beta1) * grad
    param -= state.lr * lookahead / (np.sqrt(v_hat) + state.eps)
    return param


def apply(
    optimizer: OptimizerState,
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    frozen: Collection[str] = (),
) -> None:
    """
    Advance ``t`` once and update every non-frozen parameter in place.

    Raises:
        ContractError: If a non-frozen parameter has no gradient (nothing is updated then)
    """
    frozen = set(frozen)
    trainable = [name for name in params if name not in frozen]
    missing = [name for name in trainable if name not in grads]
    if missing:
        raise ContractError(f"Missing gradients for trainable parameters: {', '.join(missing)}")
    optimizer.advance()
    for name in trainable:
        param, grad = params[name], grads[name]
        if optimizer.kind is OptimizerKind.SGD:
            step_sgd(param, grad, optimizer.lr)
        elif optimizer.kind is OptimizerKind.ADAGRAD:
            step_adagrad(param, grad, optimizer, name)
        elif optimizer.kind is OptimizerKind.ADAM:
            step_adam(param, grad, optimizer, name)
        else:
            step_nadam(param, grad, optimizer, name)


def is_finite(params: Mapping[str, np.ndarray]) -> bool:
    """Whether every parameter element is finite."""
    return all(bool(np.isfinite(p).all()) for p in params.values())


def non_finite_slot(optimizer: OptimizerState) -> Optional[str]:
    """
    Name of the first accumulator holding an infinity or NaN, or ``None``.

    A squared-gradient accumulator that overflowed turns every later step into zero, so the
    parameters stay finite while training has in fact diverged.
    """
    for name, slots in optimizer.slots.items():
        for key, value in slots.items():
            if not np.isfinite(value).all():
                return f"{name}.{key}"
    return None
