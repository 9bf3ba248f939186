"""Edge, reconstruction, world-parameter and state metrics."""

import itertools
from typing import Optional, Sequence

import numpy as np

from sdci.simulators.linear import LinearWorld
from sdci.utils.error_handling import ContractError

MAX_ALIGNED_STATES = 6


def _off_diagonal(num_objects: int) -> np.ndarray:
    return ~np.eye(num_objects, dtype=bool)


def edge_accuracy_per_sample(predicted: np.ndarray, truth: np.ndarray, broadcast_baseline: bool = False) -> np.ndarray:
    """
    Percentage of matching off-diagonal entries per sample.

    `predicted` is [B, K_pred, N, N] and `truth` [B, K, N, N]. In baseline mode the single
    predicted state is scored against every true state.
    """
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.ndim == 3:
        predicted, truth = predicted[None], truth[None]
    if broadcast_baseline:
        if predicted.shape[1] != 1:
            raise ContractError(
                f"baseline broadcast needs one predicted state, got {predicted.shape[1]}", operation="edge_accuracy"
            )
        predicted = np.broadcast_to(predicted, truth.shape)
    if predicted.shape != truth.shape:
        raise ContractError(
            f"predicted graphs {predicted.shape} do not match true graphs {truth.shape}", operation="edge_accuracy"
        )
    mask = _off_diagonal(truth.shape[-1])
    matches = (predicted == truth)[..., mask]  # [B, K, N(N-1)]
    return 100.0 * matches.reshape(matches.shape[0], -1).mean(axis=1)


def edge_accuracy(predicted: np.ndarray, truth: np.ndarray, broadcast_baseline: bool = False) -> float:
    """Percentage of matching off-diagonal entries over all samples and states."""
    return float(np.mean(edge_accuracy_per_sample(predicted, truth, broadcast_baseline)))


def reconstruction_mse_per_sample(predicted: np.ndarray, truth: np.ndarray) -> np.ndarray:
    predicted = np.asarray(predicted, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if predicted.shape != truth.shape:
        raise ContractError(
            f"predicted trajectory {predicted.shape} does not match truth {truth.shape}",
            operation="reconstruction_mse",
        )
    return ((predicted - truth) ** 2).reshape(predicted.shape[0], -1).mean(axis=1)


def reconstruction_mse(predicted: np.ndarray, truth: np.ndarray) -> float:
    """Mean squared error over time, objects and dims, averaged over samples."""
    return float(np.mean(reconstruction_mse_per_sample(predicted, truth)))


def world_param_distance(learned: Optional[dict], world: LinearWorld) -> float:
    """Mean absolute difference over alpha and the non-null betas."""
    if learned is None:
        raise ContractError(
            "world distance is only defined for the fixed-linear decoder", operation="world_param_distance"
        )
    betas = list(learned["betas"])
    if len(betas) != len(world.betas):
        raise ContractError(
            f"learned {len(betas)} betas, world defines {len(world.betas)}", operation="world_param_distance"
        )
    learned_values = np.array([learned["alpha"], *betas], dtype=np.float64)
    true_values = np.array([world.alpha, *world.betas], dtype=np.float64)
    return float(np.mean(np.abs(learned_values - true_values)))


def best_state_permutation(predicted: np.ndarray, truth: np.ndarray, num_states: int) -> tuple[int, ...]:
    """Relabeling ``perm`` maximizing the agreement of ``perm[predicted]`` with `truth`."""
    if num_states > MAX_ALIGNED_STATES:
        raise ContractError(
            f"refusing to search {num_states}! label permutations; supply an explicit mapping",
            operation="state_accuracy_aligned",
        )
    predicted = np.asarray(predicted, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    confusion = np.zeros((num_states, num_states), dtype=np.int64)
    np.add.at(confusion, (predicted.ravel(), truth.ravel()), 1)
    best, best_hits = tuple(range(num_states)), -1
    for perm in itertools.permutations(range(num_states)):
        hits = int(confusion[np.arange(num_states), list(perm)].sum())
        if hits > best_hits:
            best, best_hits = perm, hits
    return best


def state_accuracy_aligned(
    predicted: np.ndarray,
    truth: np.ndarray,
    num_states: int,
    align: bool,
    mapping: Optional[Sequence[int]] = None,
) -> float:
    """Percent of matching states, maximized over relabelings when `align` is set."""
    predicted = np.asarray(predicted, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if predicted.shape != truth.shape:
        raise ContractError(
            f"predicted states {predicted.shape} do not match truth {truth.shape}", operation="state_accuracy_aligned"
        )
    if predicted.size and (predicted.max() >= num_states or truth.max() >= num_states):
        raise ContractError(f"state values must be < {num_states}", operation="state_accuracy_aligned")
    if mapping is not None:
        predicted = np.asarray(mapping, dtype=np.int64)[predicted]
    elif align:
        perm = best_state_permutation(predicted, truth, num_states)
        predicted = np.asarray(perm, dtype=np.int64)[predicted]
    return 100.0 * float(np.mean(predicted == truth))


def align_graph_states(graphs: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    """Reorder the state axis of [B, K, N, N] graphs so that predicted state k becomes perm[k]."""
    aligned = np.empty_like(graphs)
    aligned[:, list(perm)] = graphs
    return aligned
