"""State-dependent causal summary graphs."""

from dataclasses import dataclass

import numpy as np

from sdci.utils.error_handling import ContractError, ParameterError


@dataclass(frozen=True)
class StateGraph:
    """
    K stacked N x N edge-type matrices.

    ``edges[k, i, j]`` is the type of the edge i -> j while the source i is in state k;
    type 0 means no influence and the diagonal is always 0.
    """

    edges: np.ndarray
    num_edge_types: int

    def __post_init__(self):
        edges = np.asarray(self.edges)
        if edges.ndim != 3 or edges.shape[1] != edges.shape[2]:
            raise ContractError(f"StateGraph edges must be [K, N, N], got {edges.shape}", operation="StateGraph")
        if np.any(np.diagonal(edges, axis1=1, axis2=2) != 0):
            raise ContractError("StateGraph has self-edges", operation="StateGraph")
        if edges.size and (edges.min() < 0 or edges.max() >= self.num_edge_types):
            raise ContractError(
                f"edge types must lie in [0, {self.num_edge_types})", operation="StateGraph"
            )
        object.__setattr__(self, "edges", edges.astype(np.uint8))

    @property
    def num_states(self) -> int:
        return int(self.edges.shape[0])

    @property
    def num_objects(self) -> int:
        return int(self.edges.shape[1])

    def query(self, i: int, j: int, state: int) -> int:
        """Edge type of i -> j when i is in `state`."""
        return int(self.edges[state, i, j])

    def incoming_types(self, states: np.ndarray) -> np.ndarray:
        """
        Edge types seen by each receiver given per-object states.

        Returns T with ``T[i, j] = edges[states[j], j, i]``, the type of j -> i under the
        sender's current state.
        """
        states = np.asarray(states, dtype=np.int64)
        n = self.num_objects
        return self.edges[states, np.arange(n)].T

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateGraph):
            return NotImplemented
        return self.num_edge_types == other.num_edge_types and np.array_equal(self.edges, other.edges)

    __hash__ = None  # type: ignore[assignment]


def sample_state_graph(
    num_objects: int, num_states: int, num_edge_types: int, edge_prob: float, rng: np.random.Generator
) -> StateGraph:
    """Independent edges per (state, source, target) with uniform non-null types."""
    if num_objects < 2:
        raise ParameterError(f"need at least 2 objects, got {num_objects}", operation="sample_state_graph")
    if num_states < 1:
        raise ParameterError(f"need at least 1 state, got {num_states}", operation="sample_state_graph")
    if num_edge_types < 2:
        raise ParameterError(f"need at least 2 edge types, got {num_edge_types}", operation="sample_state_graph")
    if not 0.0 <= edge_prob <= 1.0:
        raise ParameterError(f"edge_prob must lie in [0, 1], got {edge_prob}", operation="sample_state_graph")

    shape = (num_states, num_objects, num_objects)
    present = rng.random(shape) < edge_prob
    types = rng.integers(1, num_edge_types, size=shape)
    edges = np.where(present, types, 0)
    edges[:, np.arange(num_objects), np.arange(num_objects)] = 0
    return StateGraph(edges=edges, num_edge_types=num_edge_types)
