"""Ordered object pairs and the conversions between graphs and per-pair tensors."""

import numpy as np

from sdci.utils.error_handling import ContractError


def edge_pairs(num_objects: int) -> tuple[np.ndarray, np.ndarray]:
    """Sender and receiver indices of every ordered pair (i, j), i != j, in row-major order."""
    senders, receivers = np.nonzero(~np.eye(num_objects, dtype=bool))
    return senders.astype(np.int64), receivers.astype(np.int64)


def relation_matrices(num_objects: int, dtype=np.float64) -> tuple[np.ndarray, np.ndarray]:
    """One-hot ``rel_send`` and ``rel_rec`` of shape [E, N]."""
    senders, receivers = edge_pairs(num_objects)
    eye = np.eye(num_objects, dtype=dtype)
    return eye[senders], eye[receivers]


def num_pairs(num_objects: int) -> int:
    return num_objects * (num_objects - 1)


def objects_from_pairs(count: int) -> int:
    n = int(round((1 + np.sqrt(1 + 4 * count)) / 2))
    if n * (n - 1) != count:
        raise ContractError(f"{count} is not a number of ordered pairs", operation="objects_from_pairs")
    return n


def graphs_to_pairs(graphs: np.ndarray) -> np.ndarray:
    """[..., K, N, N] edge-type graphs to [..., E, K] per-pair types."""
    n = graphs.shape[-1]
    senders, receivers = edge_pairs(n)
    return np.moveaxis(graphs[..., senders, receivers], -1, -2)


def pairs_to_graphs(pairs: np.ndarray) -> np.ndarray:
    """[..., E, K] per-pair types to [..., K, N, N] graphs with a zero diagonal."""
    n = objects_from_pairs(pairs.shape[-2])
    senders, receivers = edge_pairs(n)
    by_state = np.moveaxis(pairs, -2, -1)  # [..., K, E]
    graphs = np.zeros(by_state.shape[:-1] + (n, n), dtype=pairs.dtype)
    graphs[..., senders, receivers] = by_state
    return graphs


def assignment_from_graphs(graphs: np.ndarray, num_edge_types: int, dtype=np.float64) -> np.ndarray:
    """One-hot edge assignment [..., E, K, n_e] encoding the given graphs exactly."""
    types = graphs_to_pairs(np.asarray(graphs, dtype=np.int64))
    if types.size and types.max() >= num_edge_types:
        raise ContractError(
            f"edge type {int(types.max())} out of range for {num_edge_types} types",
            operation="assignment_from_graphs",
        )
    return np.eye(num_edge_types, dtype=dtype)[types]
