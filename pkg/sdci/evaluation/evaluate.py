"""Run a model over a dataset split and collect a MetricReport."""

import logging
from typing import List, Optional

import numpy as np

from sdci.evaluation.metrics import (
    align_graph_states,
    best_state_permutation,
    edge_accuracy_per_sample,
    reconstruction_mse_per_sample,
    state_accuracy_aligned,
    world_param_distance,
)
from sdci.model.sdci import SDCIModel
from sdci.schemas.experiment import ExperimentConfig, Scenario
from sdci.schemas.metrics import MeanStderr, MetricReport
from sdci.simulators.dataset import SplitArrays
from sdci.simulators.linear import LinearWorld
from sdci.tensor.tensor import no_grad
from sdci.utils.error_handling import ContractError

logger = logging.getLogger(__name__)


def _batches(count: int, batch_size: int):
    for start in range(0, count, batch_size):
        yield slice(start, min(start + batch_size, count))


def evaluate_split(
    model: SDCIModel,
    arrays: SplitArrays,
    experiment: ExperimentConfig,
    split: str = "test",
    label: Optional[str] = None,
    batch_size: Optional[int] = None,
) -> MetricReport:
    """
    Deterministic metrics of `model` on one split.

    Edges are the posterior mode; reconstruction uses the mode assignment with the
    configured teacher forcing. Hidden-state labels are aligned to the truth before edges
    are scored; next-state accuracy is measured on single-step predictions.
    """
    if len(arrays) == 0:
        raise ContractError(f"split {split!r} has no samples to evaluate", operation="evaluate_split")
    cfg = model.cfg
    batch_size = batch_size or experiment.schedule.batch_size
    period = experiment.schedule.teacher_forcing
    broadcast = cfg.num_states == 1 and arrays.graphs.shape[1] > 1

    was_training = model.training
    model.eval()
    graphs: List[np.ndarray] = []
    mses: List[np.ndarray] = []
    hidden_pred: List[np.ndarray] = []
    next_state_hits: List[np.ndarray] = []
    try:
        with no_grad():
            for batch in _batches(len(arrays), batch_size):
                p = arrays.p[batch]
                s = arrays.s[batch]
                logits = model.encode_posteriors(p, s)
                graphs.append(model.predicted_graphs(logits))
                assignment = model.argmax_assignment(logits)
                rollout = model.rollout_decode(p, s, assignment, period)
                mses.append(reconstruction_mse_per_sample(rollout.predictions.data, p[:, 1:]))
                if model.state_head is not None:
                    hidden_pred.append(model.hidden_state_predictions(p))
                if cfg.predict_states:
                    single = model.rollout_decode(p, s, assignment, 1)
                    predicted = np.argmax(single.state_logits.data, axis=-1)
                    next_state_hits.append(predicted == s[:, 1:])
    finally:
        model.training = was_training

    predicted_graphs = np.concatenate(graphs)
    state_accuracy = None
    alignment = None
    if hidden_pred:
        predicted_states = np.concatenate(hidden_pred)
        perm = best_state_permutation(predicted_states, arrays.s, cfg.state_classes)
        alignment = [int(k) for k in perm]
        state_accuracy = state_accuracy_aligned(
            predicted_states, arrays.s, cfg.state_classes, align=False, mapping=perm
        )
        predicted_graphs = align_graph_states(predicted_graphs, perm)
    elif next_state_hits:
        state_accuracy = 100.0 * float(np.mean(np.concatenate(next_state_hits)))

    edge_acc = edge_accuracy_per_sample(predicted_graphs, arrays.graphs, broadcast_baseline=broadcast)
    mse = np.concatenate(mses)

    world_distance = None
    learned = model.learned_world()
    if learned is not None and experiment.scenario == Scenario.LINEAR:
        world = LinearWorld(alpha=experiment.world.alpha, betas=tuple(experiment.world.betas))
        world_distance = world_param_distance(learned, world)

    report = MetricReport(
        label=label or experiment.name,
        split=split,
        edge_accuracy=MeanStderr.from_values(edge_acc.tolist()),
        reconstruction_mse=MeanStderr.from_values(mse.tolist()),
        world_param_distance=world_distance,
        state_accuracy=state_accuracy,
        state_alignment=alignment,
        num_samples=len(arrays),
        learned_world=(
            {"alpha": learned["alpha"], **{f"beta_{i + 1}": b for i, b in enumerate(learned["betas"])}}
            if learned is not None
            else None
        ),
    )
    logger.info(
        f"Evaluated {report.label} on {split}",
        extra={"edge_accuracy": report.edge_accuracy.mean, "mse": report.reconstruction_mse.mean},
    )
    return report
