"""On-disk artifact Pydantic v2 schemas: tensor headers, dataset manifests, checkpoint metadata."""
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from sdci.schemas.experiment import ExperimentConfig, Regime, Scenario

SUPPORTED_DTYPES = ("<f4", "<f8", "|u1", "<i8")


class TensorHeader(BaseModel):
    """JSON line preceding every raw tensor payload."""
    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1)
    dtype: str = Field(..., description="NumPy little-endian dtype string")
    shape: List[int] = Field(default_factory=list)
    format_version: str = Field(..., description="major.minor of the writer")

    @field_validator("dtype")
    @classmethod
    def validate_dtype(cls, v: str) -> str:
        if v not in SUPPORTED_DTYPES:
            raise ValueError(f"unsupported dtype {v!r}; expected one of {SUPPORTED_DTYPES}")
        return v

    @field_validator("shape")
    @classmethod
    def validate_shape(cls, v: List[int]) -> List[int]:
        if any(extent < 0 for extent in v):
            raise ValueError("shape extents must be non-negative")
        return v


class DatasetManifest(BaseModel):
    """Top-level description of a generated dataset directory."""
    model_config = ConfigDict(extra="forbid")

    format_version: str
    scenario: Scenario
    regime: Regime
    num_objects: int = Field(..., ge=2)
    num_timesteps: int = Field(..., ge=2)
    dims: int = Field(..., ge=1)
    num_states: int = Field(..., ge=1)
    num_edge_types: int = Field(..., ge=2)
    world: Dict[str, Any] = Field(default_factory=dict, description="Generator constants")
    seed: int
    splits: Dict[str, int] = Field(..., description="Record count per split")
    diverged: Dict[str, int] = Field(default_factory=dict, description="Samples beyond the overflow guard")
    stable_fraction: Optional[float] = Field(default=None, ge=0.0, le=1.0, description="Linear only")
    config: ExperimentConfig = Field(..., description="Snapshot sufficient to regenerate the dataset")


class OptimizerGroupMeta(BaseModel):
    """Scalar Adam state of one parameter group; moments are stored as tensors."""
    model_config = ConfigDict(extra="forbid")

    lr: float = Field(..., gt=0)
    beta1: float
    beta2: float
    eps: float
    step: int = Field(..., ge=0)


class CheckpointMeta(BaseModel):
    """JSON line opening a checkpoint file."""
    model_config = ConfigDict(extra="forbid")

    format_version: str
    experiment: ExperimentConfig
    epoch: int = Field(..., ge=0, description="Number of completed epochs")
    optimizer: Dict[str, OptimizerGroupMeta] = Field(default_factory=dict)
    rng_state: Dict[str, Any] = Field(default_factory=dict)
    tensors: List[str] = Field(default_factory=list, description="Names of the records that follow, in order")
    best_score: Optional[float] = None
    best_epoch: Optional[int] = Field(default=None, ge=0, description="Epoch that produced best_score")
