"""Pydantic v2 schemas for experiment configuration, metrics and on-disk artifacts.

Quick Import Guide:
    from sdci.schemas import (
        # Configuration
        ExperimentConfig, ModelConfig, TrainSchedule, WorldSettings,
        Scenario, Regime, EncoderVariant, DecoderMode,
        # Metrics
        MetricReport, EpochRecord, MeanStderr,
        # Artifacts
        DatasetManifest, CheckpointMeta, TensorHeader,
    )
"""

from sdci.schemas.artifacts import CheckpointMeta, DatasetManifest, OptimizerGroupMeta, TensorHeader
from sdci.schemas.experiment import (
    DataSettings,
    DatasetSizes,
    DecoderInit,
    DecoderMode,
    EncoderVariant,
    ExperimentConfig,
    ModelConfig,
    Regime,
    Scenario,
    TrainSchedule,
    WorldSettings,
)
from sdci.schemas.metrics import EpochRecord, MeanStderr, MetricReport
from sdci.schemas.presets import get_preset, preset_names

__all__ = [
    "ExperimentConfig",
    "ModelConfig",
    "TrainSchedule",
    "WorldSettings",
    "DataSettings",
    "DatasetSizes",
    "Scenario",
    "Regime",
    "EncoderVariant",
    "DecoderMode",
    "DecoderInit",
    "MetricReport",
    "EpochRecord",
    "MeanStderr",
    "DatasetManifest",
    "CheckpointMeta",
    "OptimizerGroupMeta",
    "TensorHeader",
    "get_preset",
    "preset_names",
]
