"""
Single-step dynamics decoders.

A decoder receives the current frame, the per-pair edge weights ``z [B, E, n_e]`` already
queried for the senders' states, and returns the next frame plus optional next-state logits.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from sdci.model.layers import MLP, Linear
from sdci.schemas.experiment import DecoderInit, DecoderMode, ModelConfig
from sdci.tensor import ops
from sdci.tensor.optim import ParameterStore
from sdci.tensor.tensor import Tensor
from sdci.utils.error_handling import ContractError


@dataclass
class DecoderOutput:
    p_next: Tensor  # [B, N, D]
    state_logits: Optional[Tensor] = None  # [B, N, K]


def _check_edge_weights(z: Tensor, num_edge_types: int) -> None:
    if z.shape[-1] != num_edge_types:
        raise ContractError(
            f"edge weights carry {z.shape[-1]} edge types, decoder expects {num_edge_types}",
            operation="decode_transition",
        )


class LearnedDecoder:
    """
    Message passing with one MLP per non-null edge type.

    Messages from senders are gated by the edge weights, summed per receiver and turned
    into an additive update of the receiver's trajectory by an output MLP.
    """

    def __init__(self, cfg: ModelConfig, store: ParameterStore, rng: np.random.Generator):
        self.cfg = cfg
        hidden = cfg.hidden
        n_in = cfg.decoder_features
        self.msg_fc1 = [Linear(store, f"msg_fc1.{e}", 2 * n_in, hidden, rng) for e in range(1, cfg.num_edge_types)]
        self.msg_fc2 = [Linear(store, f"msg_fc2.{e}", hidden, hidden, rng) for e in range(1, cfg.num_edge_types)]
        self.out_fc1 = Linear(store, "out_fc1", n_in + hidden, hidden, rng)
        self.out_fc2 = Linear(store, "out_fc2", hidden, hidden, rng)
        self.out_fc3 = Linear(store, "out_fc3", hidden, cfg.dims, rng)
        self.state_head: Optional[MLP] = None
        self.state_out: Optional[Linear] = None
        if cfg.predict_states:
            self.state_head = MLP(store, "state_head", n_in + hidden, hidden, hidden, rng, batch_norm=False)
            self.state_out = Linear(store, "state_out", hidden, cfg.state_classes, rng)

    def __call__(self, p: Tensor, x: Tensor, z: Tensor, rel_rec: Tensor, rel_send: Tensor) -> DecoderOutput:
        _check_edge_weights(z, self.cfg.num_edge_types)
        senders = ops.matmul(rel_send, x)
        receivers = ops.matmul(rel_rec, x)
        pre_msg = ops.concat([senders, receivers], axis=-1)

        all_msgs = None
        for offset, (fc1, fc2) in enumerate(zip(self.msg_fc1, self.msg_fc2)):
            edge_type = offset + 1
            msg = ops.relu(fc2(ops.relu(fc1(pre_msg))))
            msg = msg * z[..., edge_type : edge_type + 1]
            all_msgs = msg if all_msgs is None else all_msgs + msg

        agg = ops.matmul(ops.transpose(rel_rec, (1, 0)), all_msgs)  # [B, N, H]
        aug = ops.concat([x, agg], axis=-1)
        pred = ops.relu(self.out_fc1(aug))
        pred = ops.relu(self.out_fc2(pred))
        p_next = p + self.out_fc3(pred)

        state_logits = None
        if self.state_head is not None and self.state_out is not None:
            state_logits = self.state_out(self.state_head(aug))
        return DecoderOutput(p_next=p_next, state_logits=state_logits)


class FixedLinearDecoder:
    """``p_j' = alpha p_j + sum_i sum_e z_ij,e beta_e p_i`` with learnable scalars alpha and beta_e."""

    def __init__(self, cfg: ModelConfig, store: ParameterStore, rng: np.random.Generator):
        self.cfg = cfg
        if cfg.decoder_init == DecoderInit.GROUND_TRUTH:
            alpha = np.array([cfg.true_alpha if cfg.true_alpha is not None else 1.0])
            betas = np.asarray(cfg.true_betas, dtype=np.float64)
            if betas.shape != (cfg.num_edge_types - 1,):
                raise ContractError(
                    f"need {cfg.num_edge_types - 1} ground-truth betas, got {betas.shape[0]}",
                    operation="FixedLinearDecoder",
                )
        else:
            alpha = rng.uniform(0.9, 1.1, size=1)
            betas = rng.uniform(-0.1, 0.1, size=cfg.num_edge_types - 1)
        self.alpha = store.create("alpha", alpha)
        # beta_0 is fixed at zero and never stored
        self.betas = store.create("betas", betas)

    def __call__(self, p: Tensor, x: Tensor, z: Tensor, rel_rec: Tensor, rel_send: Tensor) -> DecoderOutput:
        _check_edge_weights(z, self.cfg.num_edge_types)
        coupling = ops.matmul(z[..., 1:], ops.reshape(self.betas, (-1, 1)))  # [B, E, 1]
        messages = coupling * ops.matmul(rel_send, p)
        incoming = ops.matmul(ops.transpose(rel_rec, (1, 0)), messages)
        return DecoderOutput(p_next=p * self.alpha + incoming)

    def world(self) -> dict:
        return {"alpha": float(self.alpha.data[0]), "betas": [float(b) for b in self.betas.data]}


class HiddenStateHead:
    """Per-object state distribution ``softmax(f(p_i) / gamma)`` for the hidden regime."""

    def __init__(self, cfg: ModelConfig, store: ParameterStore, rng: np.random.Generator):
        self.cfg = cfg
        self.mlp = MLP(store, "hidden_head", cfg.dims, cfg.hidden, cfg.hidden, rng, batch_norm=False)
        self.out = Linear(store, "hidden_out", cfg.hidden, cfg.state_classes, rng)

    def logits(self, p: Tensor) -> Tensor:
        return self.out(self.mlp(p))

    def __call__(self, p: Tensor) -> Tensor:
        return ops.softmax_with_temperature(self.logits(p), self.cfg.gamma)


def build_decoder(cfg: ModelConfig, store: ParameterStore, rng: np.random.Generator):
    if cfg.decoder_mode == DecoderMode.LEARNED:
        return LearnedDecoder(cfg, store, rng)
    if cfg.decoder_mode == DecoderMode.FIXED_LINEAR:
        return FixedLinearDecoder(cfg, store, rng)
    raise ContractError(f"unknown decoder mode {cfg.decoder_mode!r}", operation="build_decoder")
