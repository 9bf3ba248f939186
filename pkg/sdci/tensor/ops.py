"""Differentiable primitives and the composites built from them."""

from __future__ import annotations

import builtins
from typing import Any, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from sdci.tensor.tensor import Tensor, TapeNode, active_tape, as_tensor
from sdci.utils.error_handling import DimensionError, ParameterError, ShapeError


def _record(op: str, out_data: np.ndarray, inputs: Sequence[Tensor], backward_fn) -> Tensor:
    tape = active_tape()
    requires_grad = tape is not None and builtins.any(t.requires_grad for t in inputs)
    out = Tensor._from_op(np.asarray(out_data), requires_grad)
    if requires_grad:
        tape.record(TapeNode(op=op, inputs=tuple(inputs), output=out, backward_fn=backward_fn))
    return out


def _pair(a: Any, b: Any) -> tuple[Tensor, Tensor]:
    like = a if isinstance(a, Tensor) else b if isinstance(b, Tensor) else None
    return as_tensor(a, like), as_tensor(b, like)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _normalize_axes(axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


# --- elementwise ---------------------------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    return _record(
        "add",
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    return _record(
        "sub",
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    return _record(
        "mul",
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def div(a, b) -> Tensor:
    a, b = _pair(a, b)
    out = a.data / b.data
    return _record(
        "div",
        out,
        (a, b),
        lambda g: (_unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)),
    )


def neg(a: Tensor) -> Tensor:
    return _record("neg", -a.data, (a,), lambda g: (-g,))


def power(a: Tensor, exponent: float) -> Tensor:
    exponent = float(exponent)
    out = a.data**exponent
    return _record("pow", out, (a,), lambda g: (g * exponent * a.data ** (exponent - 1.0),))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _record("exp", out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    return _record("log", np.log(a.data), (a,), lambda g: (g / a.data,))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return _record("relu", np.where(mask, a.data, 0).astype(a.dtype), (a,), lambda g: (g * mask,))


def elu(a: Tensor) -> Tensor:
    positive = a.data > 0
    out = np.where(positive, a.data, np.expm1(np.minimum(a.data, 0))).astype(a.dtype)
    return _record("elu", out, (a,), lambda g: (g * np.where(positive, 1.0, out + 1.0).astype(a.dtype),))


def straight_through(soft: Tensor, hard_value: np.ndarray) -> Tensor:
    """Forward `hard_value`, backward the gradient of `soft` unchanged."""
    return _record("straight_through", hard_value.astype(soft.dtype), (soft,), lambda g: (g,))


# --- linear algebra and shape ------------------------------------------------------------------


def matmul(a, b) -> Tensor:
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(
            f"matmul dimension mismatch: {a.shape} vs {b.shape}",
            operation="matmul",
            left=list(a.shape),
            right=list(b.shape),
        )

    def backward(g):
        grad_a = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape)
        grad_b = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)
        return grad_a, grad_b

    return _record("matmul", a.data @ b.data, (a, b), backward)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    original = a.shape
    return _record("reshape", a.data.reshape(shape), (a,), lambda g: (g.reshape(original),))


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    axes = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return _record("transpose", np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def swapaxes(a: Tensor, axis1: int, axis2: int) -> Tensor:
    axes = list(range(a.ndim))
    axes[axis1], axes[axis2] = axes[axis2], axes[axis1]
    return transpose(a, axes)


def expand_dims(a: Tensor, axis: int) -> Tensor:
    return reshape(a, np.expand_dims(a.data, axis).shape)


def index(a: Tensor, key) -> Tensor:
    def backward(g):
        grad = np.zeros_like(a.data)
        np.add.at(grad, key, g)
        return (grad,)

    return _record("index", a.data[key], (a,), backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    axis = axis % tensors[0].ndim
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _record("concat", np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return concat([expand_dims(as_tensor(t), axis) for t in tensors], axis=axis)


# --- reductions ---------------------------------------------------------------------------------


def sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _record("sum", np.sum(a.data, axis=axes, keepdims=keepdims), (a,), backward)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[i] for i in axes])) if axes else 1
    return sum(a, axis=axes, keepdims=keepdims) * (1.0 / count)


def max(a: Tensor, axis: int = -1, keepdims: bool = False) -> Tensor:
    axis = axis % a.ndim
    winners = np.argmax(a.data, axis=axis)
    winners = np.expand_dims(winners, axis)
    out = np.take_along_axis(a.data, winners, axis=axis)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        grad = np.zeros_like(a.data)
        np.put_along_axis(grad, winners, g, axis=axis)
        return (grad,)

    return _record("max", out if keepdims else np.squeeze(out, axis=axis), (a,), backward)


# --- normalized exponentials --------------------------------------------------------------------


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)
    return _record(
        "softmax",
        out,
        (a,),
        lambda g: (out * (g - (g * out).sum(axis=axis, keepdims=True)),),
    )


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - log_norm
    probs = np.exp(out)
    return _record(
        "log_softmax",
        out,
        (a,),
        lambda g: (g - probs * g.sum(axis=axis, keepdims=True),),
    )


def _check_temperature(tau: float, name: str = "tau") -> float:
    if not np.isfinite(tau) or tau <= 0:
        raise ParameterError(f"{name} must be positive, got {tau}", operation="softmax_with_temperature")
    return float(tau)


def softmax_with_temperature(logits: Tensor, tau: float) -> Tensor:
    """Probability vectors softmax(logits / tau) along the trailing axis."""
    tau = _check_temperature(tau)
    return softmax(as_tensor(logits) * (1.0 / tau), axis=-1)


def log_softmax_with_temperature(logits: Tensor, tau: float) -> Tensor:
    tau = _check_temperature(tau)
    return log_softmax(as_tensor(logits) * (1.0 / tau), axis=-1)


def gumbel_noise(shape: Sequence[int], rng: np.random.Generator, dtype=np.float64) -> np.ndarray:
    tiny = np.finfo(np.float64).tiny
    u = rng.uniform(low=tiny, high=1.0, size=tuple(shape))
    return (-np.log(-np.log(u))).astype(dtype)


def gumbel_softmax_sample(
    log_probs: Tensor,
    tau: float,
    rng: Optional[np.random.Generator] = None,
    hard: bool = False,
    noise: Optional[np.ndarray] = None,
) -> Tensor:
    """
    Relaxed categorical sample along the trailing axis.

    Args:
        log_probs: Log-probabilities of valid categoricals
        tau: Relaxation temperature
        rng: Stream used to draw Gumbel noise when `noise` is not supplied
        hard: Return a one-hot sample whose gradient is the soft sample's gradient
        noise: Pre-drawn Gumbel noise with the shape of `log_probs` (frozen-noise evaluation)
    """
    tau = _check_temperature(tau)
    log_probs = as_tensor(log_probs)
    if noise is None:
        if rng is None:
            raise ParameterError("gumbel_softmax_sample needs either rng or noise", operation="gumbel_softmax_sample")
        noise = gumbel_noise(log_probs.shape, rng, dtype=log_probs.dtype)
    elif noise.shape != log_probs.shape:
        raise DimensionError(
            f"gumbel noise shape {noise.shape} does not match log-probs shape {log_probs.shape}",
            operation="gumbel_softmax_sample",
        )
    soft = softmax((log_probs + noise.astype(log_probs.dtype)) * (1.0 / tau), axis=-1)
    if not hard:
        return soft
    return straight_through(soft, one_hot(np.argmax(soft.data, axis=-1), soft.shape[-1], soft.dtype))


def one_hot(indices: np.ndarray, num_classes: int, dtype=np.float64) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    out = np.zeros(indices.shape + (num_classes,), dtype=dtype)
    np.put_along_axis(out, indices[..., None], 1.0, axis=-1)
    return out


# --- temporal convolution -----------------------------------------------------------------------


def conv1d_temporal(x: Tensor, kernels: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """
    Valid cross-correlation along the trailing (time) axis.

    x has shape [..., channels, L], kernels [out, channels, w]; the result is [..., out, L - w + 1].
    """
    x, kernels = _pair(x, kernels)
    out_channels, channels, width = kernels.shape
    if x.ndim < 2 or x.shape[-2] != channels:
        raise DimensionError(
            f"conv1d channel mismatch: input {x.shape} vs kernels {kernels.shape}", operation="conv1d_temporal"
        )
    length = x.shape[-1]
    if length < width:
        raise ShapeError(
            f"conv1d needs at least {width} time steps, got {length}", operation="conv1d_temporal"
        )
    windows = sliding_window_view(x.data, width, axis=-1)  # [..., C, L', w]
    out = np.einsum("...clw,ocw->...ol", windows, kernels.data, optimize=True)
    steps = length - width + 1

    def backward(g):
        grad_k = np.einsum("...clw,...ol->ocw", windows, g, optimize=True)
        grad_x = np.zeros_like(x.data)
        for k in range(width):
            grad_x[..., k : k + steps] += np.einsum("...ol,oc->...cl", g, kernels.data[:, :, k], optimize=True)
        return grad_x, grad_k

    result = _record("conv1d", out, (x, kernels), backward)
    if bias is not None:
        result = add(result, reshape(bias, (out_channels, 1)))
    return result


def max_pool_time(x: Tensor) -> Tensor:
    """Max over the trailing (time) axis, removing it."""
    return max(x, axis=-1, keepdims=False)


# --- normalization ------------------------------------------------------------------------------


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
) -> Tensor:
    """Normalize the trailing feature axis over every leading axis; running statistics update in place."""
    axes = tuple(range(x.ndim - 1))
    if training:
        mu = mean(x, axis=axes, keepdims=True)
        centered = x - mu
        var = mean(centered * centered, axis=axes, keepdims=True)
        normed = centered * power(var + eps, -0.5)
        count = int(np.prod(x.shape[:-1]))
        unbiased = var.data.reshape(-1) * (count / builtins.max(count - 1, 1))
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu.data.reshape(-1)
        running_var *= 1.0 - momentum
        running_var += momentum * unbiased
    else:
        scale = 1.0 / np.sqrt(running_var + eps)
        normed = (x - running_mean.astype(x.dtype)) * scale.astype(x.dtype)
    return normed * gamma + beta
