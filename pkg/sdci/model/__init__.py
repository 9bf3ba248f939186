"""Encoders, decoders and the state-dependent model built from them."""

from sdci.model.decoder import DecoderOutput, FixedLinearDecoder, HiddenStateHead, LearnedDecoder
from sdci.model.encoder import StaticEncoder, TemporalEncoder
from sdci.model.relations import (
    assignment_from_graphs,
    edge_pairs,
    graphs_to_pairs,
    pairs_to_graphs,
    relation_matrices,
)
from sdci.model.sdci import ForwardOutput, RolloutOutput, SDCIModel

__all__ = [
    "SDCIModel",
    "ForwardOutput",
    "RolloutOutput",
    "DecoderOutput",
    "StaticEncoder",
    "TemporalEncoder",
    "LearnedDecoder",
    "FixedLinearDecoder",
    "HiddenStateHead",
    "edge_pairs",
    "relation_matrices",
    "graphs_to_pairs",
    "pairs_to_graphs",
    "assignment_from_graphs",
]
