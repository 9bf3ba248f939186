"""
Checkpoint files: one JSON metadata line, then tensor records in the order it lists.

Record names: ``param/<name>``, ``buffer/<name>``, ``adam/<group>/m/<name>`` and
``adam/<group>/v/<name>``. Payloads keep the model precision.
"""

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
from pydantic import ValidationError

from sdci import config
from sdci.io.tensor_files import check_version, read_tensor, write_tensor
from sdci.model.sdci import SDCIModel
from sdci.schemas.artifacts import CheckpointMeta, OptimizerGroupMeta
from sdci.schemas.experiment import ExperimentConfig
from sdci.tensor.optim import AdamState
from sdci.tensor.random import RngStreams
from sdci.utils.error_handling import CheckpointError

logger = logging.getLogger(__name__)


@dataclass
class LoadedCheckpoint:
    meta: CheckpointMeta
    model: SDCIModel
    optimizers: Dict[str, AdamState]
    rng: RngStreams

    @property
    def experiment(self) -> ExperimentConfig:
        return self.meta.experiment

    @property
    def epoch(self) -> int:
        return self.meta.epoch


def _records(model: SDCIModel, optimizers: Dict[str, AdamState]) -> Dict[str, np.ndarray]:
    records: Dict[str, np.ndarray] = {}
    for store in model.stores.values():
        for name, tensor in store.items():
            records[f"param/{name}"] = tensor.data
        for name, buffer in store.buffers.items():
            records[f"buffer/{name}"] = buffer
    for group, state in optimizers.items():
        for name in state.m:
            records[f"adam/{group}/m/{name}"] = state.m[name]
            records[f"adam/{group}/v/{name}"] = state.v[name]
    return records


def save_checkpoint(
    path: Union[str, Path],
    experiment: ExperimentConfig,
    model: SDCIModel,
    optimizers: Dict[str, AdamState],
    epoch: int,
    rng: RngStreams,
    best_score: Optional[float] = None,
    best_epoch: Optional[int] = None,
) -> Path:
    """Write atomically (temporary file, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    records = _records(model, optimizers)
    meta = CheckpointMeta(
        format_version=config.FORMAT_VERSION,
        experiment=experiment,
        epoch=epoch,
        optimizer={
            group: OptimizerGroupMeta(lr=s.lr, beta1=s.beta1, beta2=s.beta2, eps=s.eps, step=s.step)
            for group, s in optimizers.items()
        },
        rng_state=rng.state_dict(),
        tensors=list(records),
        best_score=best_score,
        best_epoch=best_epoch,
    )
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write((meta.model_dump_json() + "\n").encode("utf-8"))
        for name, array in records.items():
            write_tensor(fh, name, array)
    os.replace(tmp, path)
    logger.debug(f"Saved checkpoint {path}", extra={"epoch": epoch, "tensors": len(records)})
    return path


def _assign(target: np.ndarray, value: np.ndarray, name: str) -> None:
    if target.shape != value.shape:
        raise CheckpointError(
            f"tensor {name!r} has shape {tuple(value.shape)} in the checkpoint but the configured "
            f"architecture expects {tuple(target.shape)}",
            tensor=name,
            stored=list(value.shape),
            expected=list(target.shape),
        )
    target[...] = value


def load_checkpoint(path: Union[str, Path], experiment: Optional[ExperimentConfig] = None) -> LoadedCheckpoint:
    """
    Rebuild the model, optimizer moments and RNG streams of a checkpoint.

    With `experiment` the architecture comes from that config instead of the stored one,
    which is how shape disagreements are diagnosed.
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            raw = json.loads(line.decode("utf-8"))
        except ValueError as e:
            raise CheckpointError(f"malformed checkpoint metadata: {e}") from None
        check_version(raw.get("format_version", "0"), f"checkpoint {path.name}")
        try:
            meta = CheckpointMeta.model_validate(raw)
        except ValidationError as e:
            raise CheckpointError(f"invalid checkpoint metadata: {e}") from None

        stored: Dict[str, np.ndarray] = {}
        for expected in meta.tensors:
            header, array = read_tensor(fh, CheckpointError, expected=expected)
            if header.name != expected:
                raise CheckpointError(f"checkpoint is missing tensor {expected!r}", tensor=expected)
            stored[header.name] = array

    experiment = experiment or meta.experiment
    model = SDCIModel(experiment.build_model_config(), seed=experiment.schedule.seed)
    for store in model.stores.values():
        for name, tensor in store.items():
            key = f"param/{name}"
            if key not in stored:
                raise CheckpointError(f"checkpoint is missing tensor {key!r}", tensor=key)
            _assign(tensor.data, stored[key], key)
        for name, buffer in store.buffers.items():
            key = f"buffer/{name}"
            if key not in stored:
                raise CheckpointError(f"checkpoint is missing tensor {key!r}", tensor=key)
            _assign(buffer, stored[key], key)

    optimizers: Dict[str, AdamState] = {}
    for group, group_meta in meta.optimizer.items():
        store = model.stores[group]
        state = AdamState.for_store(
            store, lr=group_meta.lr, beta1=group_meta.beta1, beta2=group_meta.beta2, eps=group_meta.eps
        )
        state.step = group_meta.step
        for name in store:
            for moment, target in (("m", state.m[name]), ("v", state.v[name])):
                key = f"adam/{group}/{moment}/{name}"
                if key not in stored:
                    raise CheckpointError(f"checkpoint is missing tensor {key!r}", tensor=key)
                _assign(target, stored[key], key)
        optimizers[group] = state

    rng = RngStreams(experiment.schedule.seed)
    if meta.rng_state:
        rng.load_state_dict(meta.rng_state)
    logger.info(f"Loaded checkpoint {path}", extra={"epoch": meta.epoch})
    return LoadedCheckpoint(meta=meta, model=model, optimizers=optimizers, rng=rng)
