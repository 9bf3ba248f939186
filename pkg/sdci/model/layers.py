"""Parameterized building blocks: dense layers, two-layer ELU MLPs and temporal convolutions."""

from typing import Optional

import numpy as np

from sdci.tensor import ops
from sdci.tensor.optim import ParameterStore
from sdci.tensor.tensor import Tensor


def xavier_normal(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    return rng.normal(0.0, np.sqrt(2.0 / (fan_in + fan_out)), size=(fan_in, fan_out))


class Linear:
    """Affine map over the trailing axis; weights Xavier-normal, biases 0.1."""

    def __init__(self, store: ParameterStore, name: str, n_in: int, n_out: int, rng: np.random.Generator):
        self.weight = store.create(f"{name}.weight", xavier_normal(rng, n_in, n_out))
        self.bias = store.create(f"{name}.bias", np.full(n_out, 0.1))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.matmul(x, self.weight) + self.bias


class BatchNorm:
    """Normalization of the trailing feature axis over every leading axis."""

    def __init__(self, store: ParameterStore, name: str, features: int):
        self.gamma = store.create(f"{name}.gamma", np.ones(features))
        self.beta = store.create(f"{name}.beta", np.zeros(features))
        self.running_mean = store.buffer(f"{name}.running_mean", np.zeros(features))
        self.running_var = store.buffer(f"{name}.running_var", np.ones(features))

    def __call__(self, x: Tensor, training: bool) -> Tensor:
        return ops.batch_norm(x, self.gamma, self.beta, self.running_mean, self.running_var, training)


class MLP:
    """Two-layer fully-connected ELU net with optional batch norm on the output."""

    def __init__(
        self,
        store: ParameterStore,
        name: str,
        n_in: int,
        n_hid: int,
        n_out: int,
        rng: np.random.Generator,
        batch_norm: bool = True,
    ):
        self.fc1 = Linear(store, f"{name}.fc1", n_in, n_hid, rng)
        self.fc2 = Linear(store, f"{name}.fc2", n_hid, n_out, rng)
        self.bn: Optional[BatchNorm] = BatchNorm(store, f"{name}.bn", n_out) if batch_norm else None

    def __call__(self, x: Tensor, training: bool = True) -> Tensor:
        x = ops.elu(self.fc1(x))
        x = ops.elu(self.fc2(x))
        if self.bn is not None:
            x = self.bn(x, training)
        return x


class Conv1d:
    """Valid temporal convolution over [..., channels, L]."""

    def __init__(
        self, store: ParameterStore, name: str, channels: int, filters: int, width: int, rng: np.random.Generator
    ):
        std = np.sqrt(2.0 / (width * filters))
        self.kernels = store.create(f"{name}.kernels", rng.normal(0.0, std, size=(filters, channels, width)))
        self.bias = store.create(f"{name}.bias", np.full(filters, 0.1))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.conv1d_temporal(x, self.kernels, self.bias)
