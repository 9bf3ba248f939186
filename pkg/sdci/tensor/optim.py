"""Parameter storage and the Adam optimizer."""

import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional

import numpy as np

from sdci.tensor.tensor import Tensor, get_default_dtype
from sdci.utils.error_handling import ContractError, DimensionError, ParameterError

logger = logging.getLogger(__name__)


class ParameterStore:
    """Named learnable tensors plus non-learnable buffers (normalization statistics)."""

    def __init__(self, prefix: str = "", dtype: Optional[np.dtype] = None):
        self.prefix = prefix
        self.dtype = np.dtype(dtype) if dtype is not None else get_default_dtype()
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()
        self.buffers: "OrderedDict[str, np.ndarray]" = OrderedDict()
        self.frozen = False

    def _qualify(self, name: str) -> str:
        return f"{self.prefix}.{name}" if self.prefix else name

    def create(self, name: str, value: np.ndarray) -> Tensor:
        full = self._qualify(name)
        if full in self._params:
            raise ContractError(f"Duplicate parameter name {full!r}", operation="create parameter")
        tensor = Tensor(value, requires_grad=True, dtype=self.dtype, name=full)
        self._params[full] = tensor
        return tensor

    def buffer(self, name: str, value: np.ndarray) -> np.ndarray:
        full = self._qualify(name)
        if full in self.buffers:
            raise ContractError(f"Duplicate buffer name {full!r}", operation="create buffer")
        self.buffers[full] = np.array(value, dtype=self.dtype)
        return self.buffers[full]

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for tensor in self._params.values():
            tensor.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: tensor.data.copy() for name, tensor in self._params.items()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        for name, tensor in self._params.items():
            if name not in state:
                raise ContractError(f"Missing parameter {name!r}", operation="load parameters")
            value = state[name]
            if value.shape != tensor.shape:
                raise DimensionError(
                    f"Parameter {name!r} has shape {tensor.shape}, stored value has {value.shape}",
                    operation="load parameters",
                )
            tensor.data[...] = value


@dataclass
class AdamState:
    """First/second moments per parameter plus the step counter and hyperparameters."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.lr <= 0:
            raise ParameterError(f"Learning rate must be positive, got {self.lr}", operation="adam")

    @classmethod
    def for_store(cls, store: ParameterStore, lr: float, **kwargs) -> "AdamState":
        state = cls(lr=lr, **kwargs)
        for name, tensor in store.items():
            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
        return state


def adam_step(params: ParameterStore, state: AdamState, lr: Optional[float] = None) -> None:
    """Bias-corrected Adam update of every parameter in the store, then zero the gradients."""
    if lr is not None:
        if lr <= 0:
            raise ParameterError(f"Learning rate must be positive, got {lr}", operation="adam_step")
        state.lr = float(lr)
    for name, tensor in params.items():
        if tensor.grad is None:
            raise ContractError(f"Parameter {name!r} has no gradient", operation="adam_step")
        if name not in state.m or state.m[name].shape != tensor.shape:
            raise ContractError(f"Optimizer state does not match parameter {name!r}", operation="adam_step")

    if params.frozen:
        params.zero_grad()
        return

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for name, tensor in params.items():
        grad = tensor.grad
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        update = state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        tensor.data -= update.astype(tensor.dtype, copy=False)
    params.zero_grad()


def learning_rate_at(base_lr: float, epoch: int, decay_factor: float = 0.5, decay_period: int = 200) -> float:
    """Step decay: base_lr * decay_factor ** (epoch // decay_period) for zero-based epochs."""
    return base_lr * decay_factor ** (epoch // decay_period)
