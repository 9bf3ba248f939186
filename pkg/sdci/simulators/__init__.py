"""Generators of conditionally stationary time-series."""

from sdci.simulators.dataset import (
    SPLITS,
    Dataset,
    SplitArrays,
    build_dataset,
    generate_dataset,
    generate_sample,
    generate_split,
    graph_at,
    world_from_config,
)
from sdci.simulators.graphs import StateGraph, sample_state_graph
from sdci.simulators.linear import LinearWorld, linear_rollout, sign_states, var_transition_matrix
from sdci.simulators.sample import TimeSeriesSample
from sdci.simulators.springs import (
    SpringInit,
    SpringWorld,
    location_states,
    spring_coefficients,
    spring_forces,
    spring_rollout,
    spring_step,
    total_energy,
)

__all__ = [
    "StateGraph",
    "sample_state_graph",
    "TimeSeriesSample",
    "LinearWorld",
    "var_transition_matrix",
    "linear_rollout",
    "sign_states",
    "SpringWorld",
    "SpringInit",
    "spring_coefficients",
    "spring_forces",
    "spring_step",
    "spring_rollout",
    "location_states",
    "total_energy",
    "SPLITS",
    "Dataset",
    "SplitArrays",
    "build_dataset",
    "generate_dataset",
    "generate_sample",
    "generate_split",
    "graph_at",
    "world_from_config",
]
