"""
Central finite-difference gradients in 64-bit precision.
"""

from typing import Callable, Iterable, Optional, Tuple

import numpy as np


def numerical_gradient(
    loss_fn: Callable[[], float],
    array: np.ndarray,
    step: float = 1e-3,
    indices: Optional[Iterable[Tuple[int, ...]]] = None,
) -> np.ndarray:
    """
    Estimate ``d loss / d array`` by perturbing ``array`` in place.

    Args:
        loss_fn: Re-evaluates the scalar loss from the current contents of ``array``
        array: A float64 array that ``loss_fn`` reads
        step: Perturbation half-width
        indices: Entries to probe; all entries when omitted (the others are left at zero)

    Returns:
        A float64 array shaped like ``array``
    """
    if array.dtype != np.float64:
        raise TypeError(f"Gradient checks perturb float64 arrays, got {array.dtype}")
    grad = np.zeros(array.shape, dtype=np.float64)
    for index in np.ndindex(array.shape) if indices is None else indices:
        original = array[index]
        array[index] = original + step
        plus = loss_fn()
        array[index] = original - step
        minus = loss_fn()
        array[index] = original
        grad[index] = (plus - minus) / (2 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-10) -> float:
    """
    ``|a - n| / max(|a| + |n|, floor)`` over the flattened arrays (Euclidean norms).

    >>> relative_error(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    0.0
    """
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    return float(np.linalg.norm(a - n) / max(np.linalg.norm(a) + np.linalg.norm(n), floor))
