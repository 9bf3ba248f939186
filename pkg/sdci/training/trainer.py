"""Training loop: per-batch encode, sample, roll out, score, backpropagate and step Adam."""

import copy
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from sdci import config
from sdci.evaluation.evaluate import evaluate_split
from sdci.io.checkpoints import LoadedCheckpoint, load_checkpoint, save_checkpoint
from sdci.model.sdci import SDCIModel
from sdci.schemas.experiment import ExperimentConfig
from sdci.schemas.metrics import EpochRecord, MetricReport
from sdci.simulators.dataset import Dataset, SplitArrays
from sdci.tensor.optim import AdamState, adam_step, learning_rate_at
from sdci.tensor.random import RngStreams
from sdci.tensor.tensor import Tape, no_grad, precision
from sdci.training.losses import negative_elbo
from sdci.utils.error_handling import (
    ContractError,
    DivergenceError,
    log_operation_error,
    log_operation_start,
    log_operation_success,
)

logger = logging.getLogger(__name__)

METRICS_LOG = "metrics.jsonl"
LAST_CHECKPOINT = "last.ckpt"
BEST_CHECKPOINT = "best.ckpt"


@dataclass
class FitResult:
    model: SDCIModel
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None
    best_score: Optional[float] = None
    last_checkpoint: Optional[Path] = None


class Trainer:
    """
    Owns the model, both Adam groups and the run's random streams.

    The encoder and decoder groups have their own learning rates; both decay by
    ``decay_factor`` every ``decay_period`` epochs. Gumbel noise comes from a long-lived
    stream whose position is saved in checkpoints, so resuming reproduces the
    uninterrupted run.
    """

    def __init__(
        self,
        experiment: ExperimentConfig,
        out_dir: Optional[Union[str, Path]] = None,
        model: Optional[SDCIModel] = None,
    ):
        self.experiment = experiment
        self.schedule = experiment.schedule
        self.out_dir = Path(out_dir) if out_dir is not None else None
        with precision(experiment.precision):
            self.model = model or SDCIModel(experiment.build_model_config(), seed=self.schedule.seed)
        self.streams = RngStreams(self.schedule.seed)
        self.optimizers: Dict[str, AdamState] = {
            "encoder": AdamState.for_store(self.model.encoder_params, self.schedule.encoder_lr),
            "decoder": AdamState.for_store(self.model.decoder_params, self.schedule.decoder_lr),
        }
        self.epoch = 0
        self.best_score: Optional[float] = None
        self.best_epoch: Optional[int] = None
        self._best_state: Optional[dict] = None
        self._last_checkpoint: Optional[Path] = None

    @classmethod
    def resume(cls, checkpoint: Union[str, Path], out_dir: Optional[Union[str, Path]] = None) -> "Trainer":
        loaded: LoadedCheckpoint = load_checkpoint(checkpoint)
        trainer = cls(loaded.experiment, out_dir=out_dir, model=loaded.model)
        trainer.optimizers = loaded.optimizers
        trainer.streams = loaded.rng
        trainer.epoch = loaded.epoch
        trainer.best_score = loaded.meta.best_score
        trainer.best_epoch = loaded.meta.best_epoch
        trainer._last_checkpoint = Path(checkpoint)
        best_path = Path(checkpoint).parent / BEST_CHECKPOINT
        if best_path.exists():
            trainer._best_state = _snapshot(load_checkpoint(best_path).model)
        logger.info(f"Resuming {loaded.experiment.name} after epoch {loaded.epoch}")
        return trainer

    # -- learning rates ------------------------------------------------------------------------

    def learning_rates(self, epoch: int) -> Dict[str, float]:
        s = self.schedule
        return {
            "encoder": learning_rate_at(s.encoder_lr, epoch, s.decay_factor, s.decay_period),
            "decoder": learning_rate_at(s.decoder_lr, epoch, s.decay_factor, s.decay_period),
        }

    # -- one epoch ---------------------------------------------------------------------------

    def train_step(self, p: np.ndarray, s: np.ndarray, lrs: Dict[str, float]) -> dict:
        """One batch: forward on a fresh tape, backward, one Adam step per group."""
        model = self.model
        with Tape() as tape:
            output = model.forward(
                p,
                s,
                self.schedule.teacher_forcing,
                rng=self.streams.stream("gumbel"),
                hard=self.schedule.hard_sample,
            )
            losses = negative_elbo(output, p, s, self.schedule, model.cfg)
            if not losses.is_finite():
                raise DivergenceError(
                    f"non-finite loss at epoch {self.epoch}",
                    epoch=self.epoch,
                    last_good_checkpoint=str(self._last_checkpoint) if self._last_checkpoint else None,
                )
            tape.backward(losses.total)
        adam_step(model.encoder_params, self.optimizers["encoder"], lrs["encoder"])
        adam_step(model.decoder_params, self.optimizers["decoder"], lrs["decoder"])
        return losses.values()

    def train_epoch(self, train: SplitArrays) -> dict:
        if len(train) == 0:
            raise ContractError("training split is empty", operation="fit")
        lrs = self.learning_rates(self.epoch)
        order = self.streams.derive("shuffle", self.epoch).permutation(len(train))
        batch_size = self.schedule.batch_size
        sums: Dict[str, float] = {}
        batches = 0
        self.model.train()
        for start in range(0, len(train), batch_size):
            idx = np.sort(order[start : start + batch_size])
            values = self.train_step(train.p[idx], train.s[idx], lrs)
            for key, value in values.items():
                if value is not None:
                    sums[key] = sums.get(key, 0.0) + value
            batches += 1
        means = {key: value / batches for key, value in sums.items()}
        means["lr"] = lrs["encoder"]
        return means

    # -- validation and bookkeeping ------------------------------------------------------------

    def validate(self, valid: SplitArrays) -> MetricReport:
        return evaluate_split(self.model, valid, self.experiment, split="valid")

    def validation_losses(self, valid: SplitArrays) -> dict:
        """
        Loss terms on the validation split, averaged over samples.

        Runs without recording, in eval mode, with Gumbel noise from a stream derived from
        the epoch so the training stream's position is untouched.
        """
        model = self.model
        rng = self.streams.derive("valid", self.epoch)
        batch_size = self.schedule.batch_size
        sums: Dict[str, float] = {}
        was_training = model.training
        model.eval()
        try:
            with no_grad():
                for start in range(0, len(valid), batch_size):
                    p = valid.p[start : start + batch_size]
                    s = valid.s[start : start + batch_size]
                    output = model.forward(p, s, self.schedule.teacher_forcing, rng=rng)
                    values = negative_elbo(output, p, s, self.schedule, model.cfg).values()
                    for key, value in values.items():
                        if value is not None:
                            sums[key] = sums.get(key, 0.0) + value * len(p)
        finally:
            model.training = was_training
        return {key: value / len(valid) for key, value in sums.items()}

    def _log(self, record: EpochRecord) -> None:
        if self.out_dir is None:
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        with open(self.out_dir / METRICS_LOG, "a", encoding="utf-8") as fh:
            fh.write(record.model_dump_json() + "\n")

    def save(self, name: str = LAST_CHECKPOINT) -> Optional[Path]:
        if self.out_dir is None:
            return None
        path = save_checkpoint(
            self.out_dir / name,
            self.experiment,
            self.model,
            self.optimizers,
            self.epoch,
            self.streams,
            self.best_score,
            self.best_epoch,
        )
        if name == LAST_CHECKPOINT:
            self._last_checkpoint = path
        return path

    # -- full run ------------------------------------------------------------------------------

    def fit(self, dataset: Dataset) -> FitResult:
        """
        Train until ``schedule.epochs`` epochs are complete.

        Validation (edge accuracy and MSE) runs every ``SDCI_VALIDATE_EVERY`` epochs and on
        the last one; the best validation edge accuracy selects the returned parameters.
        """
        train = dataset["train"]
        valid = dataset.splits.get("valid")
        history: List[EpochRecord] = []
        started = time.perf_counter()
        log_operation_start("fit", label=self.experiment.name, epochs=self.schedule.epochs, start_epoch=self.epoch)

        with precision(self.experiment.precision):
            try:
                while self.epoch < self.schedule.epochs:
                    means = self.train_epoch(train)
                    record = EpochRecord(
                        epoch=self.epoch,
                        split="train",
                        nll_p=means["nll_p"],
                        nll_s=means.get("nll_s"),
                        kl=means["kl"],
                        total=means["total"],
                        lr=means["lr"],
                        wall_clock=time.perf_counter() - started,
                    )
                    history.append(record)
                    self._log(record)
                    self.epoch += 1

                    last_epoch = self.epoch == self.schedule.epochs
                    due = self.epoch % config.SDCI_VALIDATE_EVERY == 0 or last_epoch
                    if valid is not None and len(valid) and due:
                        report = self.validate(valid)
                        valid_losses = self.validation_losses(valid)
                        score = report.edge_accuracy.mean
                        valid_record = EpochRecord(
                            epoch=self.epoch - 1,
                            split="valid",
                            nll_p=valid_losses["nll_p"],
                            nll_s=valid_losses.get("nll_s"),
                            kl=valid_losses["kl"],
                            total=valid_losses["total"],
                            edge_acc=score,
                            mse=report.reconstruction_mse.mean,
                            lr=record.lr,
                            wall_clock=time.perf_counter() - started,
                        )
                        history.append(valid_record)
                        self._log(valid_record)
                        if self.best_score is None or score > self.best_score:
                            self.best_score = score
                            self.best_epoch = self.epoch - 1
                            self._best_state = _snapshot(self.model)
                            self.save(BEST_CHECKPOINT)

                    if self.epoch % config.SDCI_CHECKPOINT_EVERY == 0 or last_epoch:
                        self.save(LAST_CHECKPOINT)
            except DivergenceError as e:
                log_operation_error("fit", e, epoch=e.epoch, last_good_checkpoint=e.last_good_checkpoint)
                raise

        if self._best_state is not None:
            _restore(self.model, self._best_state)
        log_operation_success("fit", label=self.experiment.name, best_epoch=self.best_epoch, best_score=self.best_score)
        return FitResult(
            model=self.model,
            history=history,
            best_epoch=self.best_epoch,
            best_score=self.best_score,
            last_checkpoint=self._last_checkpoint,
        )


def _snapshot(model: SDCIModel) -> dict:
    return {
        group: {"params": store.state_dict(), "buffers": copy.deepcopy(dict(store.buffers))}
        for group, store in model.stores.items()
    }


def _restore(model: SDCIModel, state: dict) -> None:
    for group, store in model.stores.items():
        store.load_state_dict(state[group]["params"])
        for name, value in state[group]["buffers"].items():
            store.buffers[name][...] = value


def fit(
    dataset: Dataset,
    experiment: ExperimentConfig,
    out_dir: Optional[Union[str, Path]] = None,
    resume: Optional[Union[str, Path]] = None,
) -> FitResult:
    """Train a fresh model (or resume a checkpoint) on `dataset`."""
    trainer = Trainer.resume(resume, out_dir=out_dir) if resume else Trainer(experiment, out_dir=out_dir)
    return trainer.fit(dataset)
