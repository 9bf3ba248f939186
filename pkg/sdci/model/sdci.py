"""
The state-dependent encoder/decoder pair.

The encoder maps a sample to edge logits ``phi [B, E, K, n_e]``; the posterior per pair and
state is ``softmax(phi / tau)``. One relaxed sample per (pair, state) is drawn and reused
over the whole sequence. At every step the decoder queries each pair's edge weights with
the sender's state distribution, which is one-hot for observed states and the output of
the hidden-state head otherwise.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from sdci.model.decoder import DecoderOutput, FixedLinearDecoder, HiddenStateHead, build_decoder
from sdci.model.encoder import build_encoder
from sdci.model.relations import pairs_to_graphs, relation_matrices
from sdci.schemas.experiment import ModelConfig
from sdci.tensor import ops
from sdci.tensor.optim import ParameterStore
from sdci.tensor.random import RngStreams
from sdci.tensor.tensor import Tensor
from sdci.utils.error_handling import ContractError, ParameterError

logger = logging.getLogger(__name__)


@dataclass
class RolloutOutput:
    predictions: Tensor  # [B, T-1, N, D]
    state_logits: Optional[Tensor] = None  # [B, T-1, N, K], next-state logits
    hidden_probs: Optional[Tensor] = None  # [B, T-1, N, K], per input frame


@dataclass
class ForwardOutput:
    logits: Tensor
    posterior: Tensor
    assignment: Tensor
    rollout: RolloutOutput


class SDCIModel:
    """Encoder, decoder and (hidden regime) state head with their parameter stores."""

    def __init__(self, cfg: ModelConfig, seed: int = 0):
        self.cfg = cfg
        self.dtype = np.dtype(cfg.precision)
        init_rng = RngStreams(seed).derive("init")
        self.encoder_params = ParameterStore("encoder", self.dtype)
        self.decoder_params = ParameterStore("decoder", self.dtype)
        self.encoder = build_encoder(cfg, self.encoder_params, init_rng)
        self.decoder = build_decoder(cfg, self.decoder_params, init_rng)
        self.state_head: Optional[HiddenStateHead] = (
            HiddenStateHead(cfg, self.decoder_params, init_rng) if cfg.hidden_states else None
        )
        self.decoder_params.frozen = cfg.freeze_decoder
        self.training = True
        self._relations: Dict[int, tuple[Tensor, Tensor]] = {}

    # -- bookkeeping -------------------------------------------------------------------------------

    def train(self) -> "SDCIModel":
        self.training = True
        return self

    def eval(self) -> "SDCIModel":
        self.training = False
        return self

    @property
    def stores(self) -> Dict[str, ParameterStore]:
        return {"encoder": self.encoder_params, "decoder": self.decoder_params}

    def num_parameters(self) -> int:
        return sum(tensor.size for store in self.stores.values() for _, tensor in store.items())

    def relations(self, num_objects: int) -> tuple[Tensor, Tensor]:
        """Constant (rel_rec, rel_send) for N objects."""
        if num_objects not in self._relations:
            rel_send, rel_rec = relation_matrices(num_objects, self.dtype)
            self._relations[num_objects] = (Tensor(rel_rec, dtype=self.dtype), Tensor(rel_send, dtype=self.dtype))
        return self._relations[num_objects]

    def constant(self, values: np.ndarray) -> Tensor:
        return Tensor(np.asarray(values), dtype=self.dtype)

    def state_one_hot(self, s: np.ndarray) -> Tensor:
        return self.constant(ops.one_hot(s, self.cfg.state_classes, self.dtype))

    def learned_world(self) -> Optional[dict]:
        if isinstance(self.decoder, FixedLinearDecoder):
            return self.decoder.world()
        return None

    # -- encoder -------------------------------------------------------------------------------------

    def encoder_inputs(self, p: np.ndarray, s: Optional[np.ndarray]) -> Tensor:
        """Per-frame encoder features [B, T, N, F]: p, plus state one-hots in observed regimes."""
        p = np.asarray(p, dtype=self.dtype)
        if self.cfg.state_input and self.cfg.encoder_state_input:
            if s is None:
                raise ContractError("observed regimes need the state sequence", operation="encode_posteriors")
            return self.constant(np.concatenate([p, ops.one_hot(s, self.cfg.state_classes, self.dtype)], axis=-1))
        return self.constant(p)

    def encode_posteriors(self, p: np.ndarray, s: Optional[np.ndarray] = None) -> Tensor:
        """Edge logits [B, E, K, n_e] for every ordered pair, state and edge type."""
        p = np.asarray(p)
        if p.ndim != 4:
            raise ContractError(f"p must be [B, T, N, D], got {p.shape}", operation="encode_posteriors")
        if p.shape[1] < 2:
            raise ContractError("encoding needs at least two frames", operation="encode_posteriors")
        rel_rec, rel_send = self.relations(p.shape[2])
        x = self.encoder_inputs(p, s)
        return self.encoder(x, rel_rec, rel_send, self.training)

    def posterior(self, logits: Tensor) -> Tensor:
        return ops.softmax_with_temperature(logits, self.cfg.tau)

    def sample_edge_assignments(
        self,
        logits: Tensor,
        rng: Optional[np.random.Generator] = None,
        hard: bool = False,
        noise: Optional[np.ndarray] = None,
    ) -> Tensor:
        """One relaxed draw per (pair, state), shape [B, E, K, n_e]."""
        log_q = ops.log_softmax_with_temperature(logits, self.cfg.tau)
        return ops.gumbel_softmax_sample(log_q, self.cfg.tau, rng=rng, hard=hard, noise=noise)

    def argmax_assignment(self, logits: Tensor) -> Tensor:
        """Deterministic one-hot assignment at the posterior mode."""
        return self.constant(ops.one_hot(np.argmax(logits.data, axis=-1), self.cfg.num_edge_types, self.dtype))

    def predicted_graphs(self, logits: Tensor) -> np.ndarray:
        """Posterior-mode edge types as graphs [B, K, N, N]."""
        return pairs_to_graphs(np.argmax(logits.data, axis=-1).astype(np.uint8))

    # -- decoder ---------------------------------------------------------------------------------

    def edge_weights(self, assignment: Tensor, state_probs: Optional[Tensor], num_objects: int) -> Tensor:
        """``z_ij = sum_k w_ijk p(k | sender i)``, shape [B, E, n_e]."""
        if assignment.shape[-2] != self.cfg.num_states:
            raise ContractError(
                f"assignment has {assignment.shape[-2]} states, model has {self.cfg.num_states}",
                operation="edge_weights",
            )
        if self.cfg.num_states == 1 or state_probs is None:
            if self.cfg.num_states != 1:
                raise ContractError("state distribution required to query edges", operation="edge_weights")
            return assignment[..., 0, :]
        _, rel_send = self.relations(num_objects)
        sender_probs = ops.matmul(rel_send, state_probs)  # [B, E, K]
        return ops.sum(assignment * ops.expand_dims(sender_probs, -1), axis=-2)

    def infer_hidden_states(self, p_t: Tensor) -> Tensor:
        """Per-object state distribution [B, N, K] from the current frame."""
        if self.state_head is None:
            raise ContractError("model has no hidden-state head", operation="infer_hidden_states")
        return self.state_head(p_t)

    def decode_transition(
        self, p_t: Tensor, state_input: Optional[Tensor], assignment: Tensor, edge_state_probs: Optional[Tensor]
    ) -> DecoderOutput:
        """One step: next frame [B, N, D] and, when predicted, next-state logits [B, N, K]."""
        num_objects = p_t.shape[-2]
        rel_rec, rel_send = self.relations(num_objects)
        x = ops.concat([p_t, state_input], axis=-1) if state_input is not None else p_t
        z = self.edge_weights(assignment, edge_state_probs, num_objects)
        return self.decoder(p_t, x, z, rel_rec, rel_send)

    def rollout_decode(
        self, p: np.ndarray, s: Optional[np.ndarray], assignment: Tensor, teacher_forcing: int
    ) -> RolloutOutput:
        """
        Predict frames 1..T-1.

        Ground truth is the input at frames divisible by `teacher_forcing`, otherwise the
        previous prediction is. Observed-independent states are always taken from `s`;
        observed-dependent states off the forced frames are the softmax of the previous
        next-state logits.
        """
        if teacher_forcing < 1:
            raise ParameterError(
                f"teacher forcing period must be >= 1, got {teacher_forcing}", operation="rollout_decode"
            )
        cfg = self.cfg
        truth = self.constant(np.asarray(p, dtype=self.dtype))
        steps = truth.shape[1]
        observed = cfg.state_input and s is not None

        predictions: List[Tensor] = []
        state_logits: List[Tensor] = []
        hidden_probs: List[Tensor] = []
        current: Optional[Tensor] = None
        fed_back: Optional[Tensor] = None
        for t in range(steps - 1):
            forced = t % teacher_forcing == 0
            p_t = truth[:, t] if forced or current is None else current

            state_input: Optional[Tensor] = None
            edge_probs: Optional[Tensor] = None
            if self.state_head is not None:
                edge_probs = self.infer_hidden_states(p_t)
                hidden_probs.append(edge_probs)
            elif observed:
                if cfg.predict_states and not forced and fed_back is not None:
                    state_input = fed_back
                else:
                    state_input = self.state_one_hot(s[:, t])
                edge_probs = state_input if cfg.num_states > 1 else None
            elif cfg.state_input:
                raise ContractError("observed regimes need the state sequence", operation="rollout_decode")

            out = self.decode_transition(p_t, state_input, assignment, edge_probs)
            predictions.append(out.p_next)
            current = out.p_next
            if out.state_logits is not None:
                state_logits.append(out.state_logits)
                fed_back = ops.softmax(out.state_logits, axis=-1)

        return RolloutOutput(
            predictions=ops.stack(predictions, axis=1),
            state_logits=ops.stack(state_logits, axis=1) if state_logits else None,
            hidden_probs=ops.stack(hidden_probs, axis=1) if hidden_probs else None,
        )

    # -- full pass ---------------------------------------------------------------------------------

    def forward(
        self,
        p: np.ndarray,
        s: Optional[np.ndarray],
        teacher_forcing: int,
        rng: Optional[np.random.Generator] = None,
        hard: bool = False,
        noise: Optional[np.ndarray] = None,
    ) -> ForwardOutput:
        """Encode, sample one assignment and decode the whole sequence."""
        logits = self.encode_posteriors(p, s)
        posterior = self.posterior(logits)
        assignment = self.sample_edge_assignments(logits, rng=rng, hard=hard, noise=noise)
        rollout = self.rollout_decode(p, s, assignment, teacher_forcing)
        return ForwardOutput(logits=logits, posterior=posterior, assignment=assignment, rollout=rollout)

    def hidden_state_predictions(self, p: np.ndarray) -> np.ndarray:
        """Most likely hidden state per frame and object [B, T, N]."""
        probs = self.infer_hidden_states(self.constant(np.asarray(p, dtype=self.dtype)))
        return np.argmax(probs.data, axis=-1)
