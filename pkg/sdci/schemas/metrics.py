"""Metric Pydantic v2 schemas: evaluation reports and per-epoch training records."""
import math
from typing import Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

from sdci.utils.error_handling import ContractError


class MeanStderr(BaseModel):
    """Mean with the standard error of the mean over samples."""
    model_config = ConfigDict(extra="forbid")

    mean: float = Field(..., description="Sample mean")
    stderr: float = Field(default=0.0, ge=0.0, description="Standard error of the mean")
    count: int = Field(default=0, ge=0, description="Number of samples aggregated")

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "MeanStderr":
        n = len(values)
        if n == 0:
            raise ContractError("cannot summarize an empty list of values", operation="MeanStderr.from_values")
        mean = math.fsum(values) / n
        if n < 2:
            return cls(mean=mean, stderr=0.0, count=n)
        variance = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
        return cls(mean=mean, stderr=math.sqrt(variance / n), count=n)

    def format(self, scale: float = 1.0, digits: int = 2, scientific: bool = False) -> str:
        mean, err = self.mean * scale, self.stderr * scale
        if scientific:
            return f"{mean:.{digits}e} ± {err:.{digits}e}"
        return f"{mean:.{digits}f} ± {err:.{digits}f}"


class MetricReport(BaseModel):
    """Evaluation metrics of one run on one split."""
    model_config = ConfigDict(extra="forbid")

    label: str = Field(..., description="Run label, usually the experiment name")
    split: str = Field(..., description="Dataset split evaluated")
    edge_accuracy: MeanStderr = Field(..., description="Edge-type accuracy in percent")
    reconstruction_mse: MeanStderr = Field(..., description="Teacher-forced rollout MSE")
    world_param_distance: Optional[float] = Field(default=None, ge=0.0, description="Fixed-linear decoders only")
    state_accuracy: Optional[float] = Field(
        default=None, ge=0.0, le=100.0, description="Percent, state-predicting runs"
    )
    state_alignment: Optional[list[int]] = Field(default=None, description="Label permutation used for hidden states")
    num_samples: int = Field(default=0, ge=0)
    learned_world: Optional[dict[str, float]] = Field(default=None, description="Learned alpha/beta scalars")

    @property
    def has_state_metrics(self) -> bool:
        return self.state_accuracy is not None


class EpochRecord(BaseModel):
    """One line of the JSON-lines training log."""
    model_config = ConfigDict(extra="forbid")

    epoch: int = Field(..., ge=0)
    split: str = Field(..., description="train or valid")
    nll_p: float
    nll_s: Optional[float] = None
    kl: float
    total: float
    edge_acc: Optional[float] = Field(default=None, description="Percent; validation records only")
    mse: Optional[float] = None
    lr: float = Field(..., description="Encoder learning rate for the epoch")
    wall_clock: float = Field(..., ge=0.0, description="Seconds since training started")
