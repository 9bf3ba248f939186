"""
Dataset generation: per-sample independent streams, parallel across samples.

Each sample draws its graph, initial condition and (observed-independent) states from
``RngStreams(seed).derive("data", split_id, index)``, so the thread count never changes
the output.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from sdci import config
from sdci.schemas.artifacts import DatasetManifest
from sdci.schemas.experiment import ExperimentConfig, Scenario
from sdci.simulators.graphs import StateGraph, sample_state_graph
from sdci.simulators.linear import LinearWorld, linear_rollout, stable_under_all_states
from sdci.simulators.sample import TimeSeriesSample
from sdci.simulators.springs import SpringWorld, spring_rollout
from sdci.tensor.random import RngStreams
from sdci.utils.error_handling import ContractError, log_operation_start, log_operation_success

logger = logging.getLogger(__name__)

SPLITS = ("train", "valid", "test")
SPLIT_IDS = {name: i for i, name in enumerate(SPLITS)}


@dataclass
class SplitArrays:
    """Stacked samples of one split."""

    p: np.ndarray  # [S, T, N, D] float32
    s: np.ndarray  # [S, T, N] uint8
    graphs: np.ndarray  # [S, K, N, N] uint8
    diverged: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self):
        if self.diverged.shape != (len(self.p),):
            self.diverged = np.zeros(len(self.p), dtype=bool)
        if not (len(self.p) == len(self.s) == len(self.graphs)):
            raise ContractError("split arrays disagree on the number of samples", operation="SplitArrays")

    def __len__(self) -> int:
        return int(self.p.shape[0])

    def subset(self, indices) -> "SplitArrays":
        return SplitArrays(
            p=self.p[indices], s=self.s[indices], graphs=self.graphs[indices], diverged=self.diverged[indices]
        )


@dataclass
class Dataset:
    manifest: DatasetManifest
    splits: Dict[str, SplitArrays]

    def __getitem__(self, split: str) -> SplitArrays:
        if split not in self.splits:
            raise ContractError(f"dataset has no split {split!r}", operation="Dataset")
        return self.splits[split]


def world_from_config(cfg: ExperimentConfig) -> Union[LinearWorld, SpringWorld]:
    if cfg.scenario == Scenario.LINEAR:
        return LinearWorld(alpha=cfg.world.alpha, betas=tuple(cfg.world.betas))
    return SpringWorld(
        deltas=tuple(cfg.world.deltas),
        box_half_width=cfg.world.box_half_width,
        dt=cfg.world.dt,
        subsample=cfg.world.subsample,
    )


def generate_sample(
    cfg: ExperimentConfig, split: str, index: int, streams: Optional[RngStreams] = None
) -> TimeSeriesSample:
    """One sample with its own graph, drawn from the (split, index) stream."""
    streams = streams or RngStreams(cfg.seed)
    rng = streams.derive("data", SPLIT_IDS[split], index)
    graph = sample_state_graph(cfg.num_objects, cfg.num_states, cfg.num_edge_types, cfg.data.edge_prob, rng)
    world = world_from_config(cfg)
    if isinstance(world, LinearWorld):
        return linear_rollout(graph, world, cfg.num_timesteps, cfg.regime, rng)
    return spring_rollout(
        graph,
        world,
        cfg.num_timesteps,
        cfg.regime,
        rng,
        state_period=cfg.world.state_period,
        position_std=cfg.world.position_std,
        velocity_norm=cfg.world.velocity_norm,
    )


def stack_samples(samples: List[TimeSeriesSample]) -> SplitArrays:
    return SplitArrays(
        p=np.stack([sample.p for sample in samples]).astype(np.float32),
        s=np.stack([sample.s for sample in samples]).astype(np.uint8),
        graphs=np.stack([sample.graph.edges for sample in samples]).astype(np.uint8),
        diverged=np.array([sample.diverged for sample in samples], dtype=bool),
    )


def graph_at(split: SplitArrays, index: int, num_edge_types: int) -> StateGraph:
    return StateGraph(edges=split.graphs[index], num_edge_types=num_edge_types)


def _generate_indices(cfg: ExperimentConfig, split: str, indices: range, workers: int) -> List[TimeSeriesSample]:
    streams = RngStreams(cfg.seed)
    if workers <= 1:
        return [generate_sample(cfg, split, i, streams) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(lambda i: generate_sample(cfg, split, i, streams), indices))


def generate_split(
    cfg: ExperimentConfig, split: str, count: int, workers: Optional[int] = None
) -> tuple[SplitArrays, int]:
    """
    Generate `count` samples of a split.

    Returns the stacked arrays and the number of diverged samples encountered. With
    ``data.drop_diverged`` flagged samples are skipped and further indices are drawn
    until `count` samples remain.
    """
    workers = workers or config.num_threads()
    if count == 0:
        shape_t, n, d = cfg.num_timesteps, cfg.num_objects, cfg.dims
        empty = SplitArrays(
            p=np.zeros((0, shape_t, n, d), dtype=np.float32),
            s=np.zeros((0, shape_t, n), dtype=np.uint8),
            graphs=np.zeros((0, cfg.num_states, n, n), dtype=np.uint8),
        )
        return empty, 0

    samples = _generate_indices(cfg, split, range(count), workers)
    diverged = sum(sample.diverged for sample in samples)
    if cfg.data.drop_diverged and diverged:
        kept = [sample for sample in samples if not sample.diverged]
        next_index = count
        while len(kept) < count:
            batch = range(next_index, next_index + (count - len(kept)))
            extra = _generate_indices(cfg, split, batch, workers)
            diverged += sum(sample.diverged for sample in extra)
            kept.extend(sample for sample in extra if not sample.diverged)
            next_index = batch.stop
            if next_index > 100 * count:
                raise ContractError(
                    f"could not collect {count} non-diverged samples for split {split!r}",
                    operation="generate_split",
                )
        samples = kept[:count]
    return stack_samples(samples), diverged


def build_dataset(cfg: ExperimentConfig, workers: Optional[int] = None) -> Dataset:
    """Generate every split in memory together with its manifest."""
    log_operation_start("generate dataset", label=cfg.name, scenario=cfg.scenario.value, regime=cfg.regime.value)
    splits: Dict[str, SplitArrays] = {}
    diverged: Dict[str, int] = {}
    for split, count in cfg.data.sizes.as_dict().items():
        splits[split], diverged[split] = generate_split(cfg, split, count, workers)

    stable_fraction = None
    world = world_from_config(cfg)
    if isinstance(world, LinearWorld):
        train = splits["train"]
        stable = [
            stable_under_all_states(graph_at(train, i, cfg.num_edge_types), world) for i in range(len(train))
        ]
        stable_fraction = float(np.mean(stable)) if stable else None

    manifest = DatasetManifest(
        format_version=config.FORMAT_VERSION,
        scenario=cfg.scenario,
        regime=cfg.regime,
        num_objects=cfg.num_objects,
        num_timesteps=cfg.num_timesteps,
        dims=cfg.dims,
        num_states=cfg.num_states,
        num_edge_types=cfg.num_edge_types,
        world=world.as_dict(),
        seed=cfg.seed,
        splits={name: len(arrays) for name, arrays in splits.items()},
        diverged=diverged,
        stable_fraction=stable_fraction,
        config=cfg,
    )
    log_operation_success("generate dataset", splits=manifest.splits, diverged=diverged)
    return Dataset(manifest=manifest, splits=splits)


def generate_dataset(cfg: ExperimentConfig, out_dir: Union[str, Path], workers: Optional[int] = None) -> Dataset:
    """Generate every split and write the dataset container to `out_dir`."""
    from sdci.io.datasets import write_dataset

    dataset = build_dataset(cfg, workers)
    write_dataset(dataset, out_dir)
    return dataset
