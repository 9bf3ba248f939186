"""Central finite-difference validation of reverse-mode gradients."""

from typing import Callable, Sequence

import numpy as np

from sdci.tensor.tensor import Tape, Tensor, no_grad


def numerical_gradient(fn: Callable[[], Tensor], tensor: Tensor, h: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(tensor.data, dtype=np.float64)
    flat = tensor.data.reshape(-1)
    with no_grad():
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            plus = float(fn().data.sum())
            flat[i] = original - h
            minus = float(fn().data.sum())
            flat[i] = original
            grad.reshape(-1)[i] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def gradient_check(fn: Callable[[], Tensor], inputs: Sequence[Tensor], h: float = 1e-6) -> float:
    """
    Largest relative error between tape gradients and central differences.

    `fn` must rebuild the scalar loss from `inputs` on every call; inputs should be
    double precision leaves with requires_grad set.
    """
    for tensor in inputs:
        tensor.zero_grad()
    with Tape() as tape:
        loss = fn()
        tape.backward(loss)
    worst = 0.0
    for tensor in inputs:
        numeric = numerical_gradient(fn, tensor, h)
        worst = max(worst, relative_error(tensor.grad.astype(np.float64), numeric))
    return worst
