"""Metrics, split evaluation and table rendering."""

from sdci.evaluation.evaluate import evaluate_split
from sdci.evaluation.metrics import (
    align_graph_states,
    best_state_permutation,
    edge_accuracy,
    edge_accuracy_per_sample,
    reconstruction_mse,
    reconstruction_mse_per_sample,
    state_accuracy_aligned,
    world_param_distance,
)
from sdci.evaluation.report import load_reports, render_table

__all__ = [
    "edge_accuracy",
    "edge_accuracy_per_sample",
    "reconstruction_mse",
    "reconstruction_mse_per_sample",
    "world_param_distance",
    "state_accuracy_aligned",
    "best_state_permutation",
    "align_graph_states",
    "evaluate_split",
    "load_reports",
    "render_table",
]
