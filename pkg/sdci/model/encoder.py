"""
Edge-posterior encoders.

Both variants share a relational block: node MLP, pairwise MLP, aggregation of incoming
messages, node MLP and a pairwise MLP with a skip connection. They differ in what a node
sees. The static encoder flattens each object's whole sequence; the temporal encoder runs
the block on consecutive-frame pairs and aggregates the per-step pair embeddings with a
two-layer 1D CNN followed by max-pooling over time.
"""

import numpy as np

from sdci.model.layers import MLP, Conv1d, Linear
from sdci.schemas.experiment import EncoderVariant, ModelConfig
from sdci.tensor import ops
from sdci.tensor.optim import ParameterStore
from sdci.tensor.tensor import Tensor
from sdci.utils.error_handling import ContractError, DimensionError


class RelationalBlock:
    def __init__(self, store: ParameterStore, n_in: int, hidden: int, rng: np.random.Generator, batch_norm: bool):
        self.mlp1 = MLP(store, "mlp1", n_in, hidden, hidden, rng, batch_norm)
        self.mlp2 = MLP(store, "mlp2", 2 * hidden, hidden, hidden, rng, batch_norm)
        self.mlp3 = MLP(store, "mlp3", hidden, hidden, hidden, rng, batch_norm)
        self.mlp4 = MLP(store, "mlp4", 3 * hidden, hidden, hidden, rng, batch_norm)

    @staticmethod
    def node2edge(x: Tensor, rel_rec: Tensor, rel_send: Tensor) -> Tensor:
        senders = ops.matmul(rel_send, x)
        receivers = ops.matmul(rel_rec, x)
        return ops.concat([senders, receivers], axis=-1)

    @staticmethod
    def edge2node(x: Tensor, rel_rec: Tensor) -> Tensor:
        incoming = ops.matmul(ops.transpose(rel_rec, (1, 0)), x)
        return incoming * (1.0 / rel_rec.shape[1])

    def __call__(self, x: Tensor, rel_rec: Tensor, rel_send: Tensor, training: bool) -> Tensor:
        x = self.mlp1(x, training)
        x = self.node2edge(x, rel_rec, rel_send)
        x = self.mlp2(x, training)
        x_skip = x
        x = self.edge2node(x, rel_rec)
        x = self.mlp3(x, training)
        x = self.node2edge(x, rel_rec, rel_send)
        x = ops.concat([x, x_skip], axis=-1)
        return self.mlp4(x, training)


class StaticEncoder:
    """Embeds each object's full sequence; emits logits [B, E, K, n_e]."""

    def __init__(self, cfg: ModelConfig, store: ParameterStore, rng: np.random.Generator):
        self.cfg = cfg
        n_in = cfg.num_timesteps * cfg.encoder_features
        self.block = RelationalBlock(store, n_in, cfg.hidden, rng, cfg.batch_norm)
        self.fc_out = Linear(store, "fc_out", cfg.hidden, cfg.num_states * cfg.num_edge_types, rng)

    def __call__(self, x: Tensor, rel_rec: Tensor, rel_send: Tensor, training: bool) -> Tensor:
        batch, steps, objects, features = x.shape
        if steps != self.cfg.num_timesteps:
            raise DimensionError(
                f"static encoder was built for T={self.cfg.num_timesteps}, got T={steps}", operation="encode_posteriors"
            )
        nodes = ops.reshape(ops.transpose(x, (0, 2, 1, 3)), (batch, objects, steps * features))
        edges = self.block(nodes, rel_rec, rel_send, training)
        logits = self.fc_out(edges)
        return ops.reshape(logits, (batch, edges.shape[1], self.cfg.num_states, self.cfg.num_edge_types))


class TemporalEncoder:
    """Per-step pair embeddings from consecutive frames, aggregated over time by a 1D CNN."""

    def __init__(self, cfg: ModelConfig, store: ParameterStore, rng: np.random.Generator):
        self.cfg = cfg
        self.block = RelationalBlock(store, 2 * cfg.encoder_features, cfg.hidden, rng, cfg.batch_norm)
        self.conv1 = Conv1d(store, "conv1", cfg.hidden, cfg.cnn_filters, cfg.kernel_width, rng)
        self.conv2 = Conv1d(store, "conv2", cfg.cnn_filters, cfg.cnn_filters, cfg.kernel_width, rng)
        self.fc_out = Linear(store, "fc_out", cfg.cnn_filters, cfg.num_states * cfg.num_edge_types, rng)

    def __call__(self, x: Tensor, rel_rec: Tensor, rel_send: Tensor, training: bool) -> Tensor:
        batch, steps = x.shape[:2]
        frames = ops.concat([x[:, :-1], x[:, 1:]], axis=-1)  # [B, T-1, N, 2F]
        edges = self.block(frames, rel_rec, rel_send, training)  # [B, T-1, E, H]
        series = ops.transpose(edges, (0, 2, 3, 1))  # [B, E, H, T-1]
        series = ops.elu(self.conv1(series))
        series = self.conv2(series)
        pooled = ops.max_pool_time(series)  # [B, E, filters]
        logits = self.fc_out(pooled)
        return ops.reshape(logits, (batch, pooled.shape[1], self.cfg.num_states, self.cfg.num_edge_types))


def build_encoder(cfg: ModelConfig, store: ParameterStore, rng: np.random.Generator):
    if cfg.variant == EncoderVariant.STATIC:
        return StaticEncoder(cfg, store, rng)
    if cfg.variant == EncoderVariant.TEMPORAL:
        return TemporalEncoder(cfg, store, rng)
    raise ContractError(f"unknown encoder variant {cfg.variant!r}", operation="build_encoder")
