"""
Dense tensors backed by NumPy with reverse-mode automatic differentiation.

Operations executed while a `Tape` is active are recorded in execution order;
`Tape.backward` walks the records once in reverse and accumulates gradients into
every leaf tensor that requires them. Outside a tape nothing is recorded, which
is how evaluation runs.
"""

from __future__ import annotations

import contextlib
import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Optional, Sequence

import numpy as np

from sdci import config
from sdci.utils.error_handling import ContractError, ParameterError

logger = logging.getLogger(__name__)

_PRECISIONS = {"float32": np.float32, "float64": np.float64}
_state = threading.local()


def _resolve_dtype(precision: str | np.dtype | type) -> np.dtype:
    if isinstance(precision, str):
        if precision not in _PRECISIONS:
            raise ParameterError(f"Unsupported precision {precision!r}; expected one of {sorted(_PRECISIONS)}")
        return np.dtype(_PRECISIONS[precision])
    return np.dtype(precision)


def get_default_dtype() -> np.dtype:
    dtype = getattr(_state, "dtype", None)
    if dtype is None:
        dtype = _resolve_dtype(config.SDCI_DEFAULT_PRECISION)
        _state.dtype = dtype
    return dtype


def set_default_dtype(precision: str | np.dtype | type) -> None:
    _state.dtype = _resolve_dtype(precision)


@contextlib.contextmanager
def precision(name: str | np.dtype | type) -> Iterator[np.dtype]:
    """Temporarily switch the default floating point precision of new tensors."""
    previous = get_default_dtype()
    set_default_dtype(name)
    try:
        yield get_default_dtype()
    finally:
        _state.dtype = previous


class Tensor:
    """A real-valued array that can take part in reverse-mode differentiation."""

    __array_priority__ = 100

    def __init__(
        self,
        data: Any,
        requires_grad: bool = False,
        dtype: Optional[np.dtype | str | type] = None,
        name: Optional[str] = None,
        _copy: bool = True,
    ):
        target = _resolve_dtype(dtype) if dtype is not None else None
        if isinstance(data, np.ndarray) and target is None and np.issubdtype(data.dtype, np.floating):
            target = data.dtype
        target = target or get_default_dtype()
        array = np.array(data, dtype=target) if _copy else np.asarray(data, dtype=target)
        self.data: np.ndarray = array
        self.requires_grad = bool(requires_grad)
        self.name = name
        self.is_leaf = True
        self.grad: Optional[np.ndarray] = np.zeros_like(array) if self.requires_grad else None

    @classmethod
    def _from_op(cls, data: np.ndarray, requires_grad: bool) -> "Tensor":
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = requires_grad
        out.name = None
        out.is_leaf = False
        out.grad = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, _copy=False)

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad}{label})"

    # Arithmetic is implemented in sdci.tensor.ops; these bindings keep expressions readable.
    def __add__(self, other):
        from sdci.tensor import ops

        return ops.add(self, other)

    def __radd__(self, other):
        from sdci.tensor import ops

        return ops.add(other, self)

    def __sub__(self, other):
        from sdci.tensor import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from sdci.tensor import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from sdci.tensor import ops

        return ops.mul(self, other)

    def __rmul__(self, other):
        from sdci.tensor import ops

        return ops.mul(other, self)

    def __truediv__(self, other):
        from sdci.tensor import ops

        return ops.div(self, other)

    def __rtruediv__(self, other):
        from sdci.tensor import ops

        return ops.div(other, self)

    def __neg__(self):
        from sdci.tensor import ops

        return ops.neg(self)

    def __pow__(self, exponent: float):
        from sdci.tensor import ops

        return ops.power(self, exponent)

    def __matmul__(self, other):
        from sdci.tensor import ops

        return ops.matmul(self, other)

    def __rmatmul__(self, other):
        from sdci.tensor import ops

        return ops.matmul(other, self)

    def __getitem__(self, key):
        from sdci.tensor import ops

        return ops.index(self, key)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        from sdci.tensor import ops

        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        from sdci.tensor import ops

        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        from sdci.tensor import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        from sdci.tensor import ops

        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.transpose(self, axes or None)


@dataclass
class TapeNode:
    """One recorded operation: its inputs, its output and the vector-Jacobian product."""

    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward_fn: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class Tape:
    """Ordered record of differentiable operations for one training step."""

    nodes: list[TapeNode] = field(default_factory=list)
    consumed: bool = False

    def __enter__(self) -> "Tape":
        stack = _tape_stack()
        stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()
        self.clear()

    def record(self, node: TapeNode) -> None:
        self.nodes.append(node)

    def clear(self) -> None:
        self.nodes.clear()

    def __len__(self) -> int:
        return len(self.nodes)

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into `.grad` of every leaf reachable from `loss`."""
        if loss.size != 1:
            raise ContractError(
                f"backward requires a scalar loss, got shape {loss.shape}", operation="backward"
            )
        if not loss.requires_grad:
            return

        if loss.is_leaf:
            loss.grad = (loss.grad if loss.grad is not None else np.zeros_like(loss.data)) + 1
            return
        grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self.nodes):
            upstream = grads.pop(id(node.output), None)
            if upstream is None:
                continue
            input_grads = node.backward_fn(upstream)
            for tensor, grad in zip(node.inputs, input_grads):
                if grad is None or not tensor.requires_grad:
                    continue
                if tensor.is_leaf:
                    if tensor.grad is None:
                        tensor.grad = np.zeros_like(tensor.data)
                    tensor.grad += grad.astype(tensor.data.dtype, copy=False)
                else:
                    key = id(tensor)
                    if key in grads:
                        grads[key] = grads[key] + grad
                    else:
                        grads[key] = grad
        self.consumed = True


def _tape_stack() -> list[Tape]:
    stack = getattr(_state, "tapes", None)
    if stack is None:
        stack = []
        _state.tapes = stack
    return stack


def active_tape() -> Optional[Tape]:
    stack = _tape_stack()
    return stack[-1] if stack else None


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Suspend recording inside an active tape."""
    stack = _tape_stack()
    saved = list(stack)
    stack.clear()
    try:
        yield
    finally:
        stack.extend(saved)


def backward(loss: Tensor, tape: Optional[Tape] = None) -> None:
    """Run reverse-mode differentiation on the given (or currently active) tape."""
    tape = tape if tape is not None else active_tape()
    if tape is None:
        raise ContractError("backward called with no recording tape", operation="backward")
    tape.backward(loss)


def as_tensor(value: Any, like: Optional[Tensor] = None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(value, dtype=dtype or get_default_dtype()), _copy=False)


def parameter(data: Any, name: Optional[str] = None, dtype=None) -> Tensor:
    return Tensor(data, requires_grad=True, dtype=dtype, name=name)
