"""Versioned on-disk formats for datasets, checkpoints and metric files."""

from sdci.io.checkpoints import LoadedCheckpoint, load_checkpoint, save_checkpoint
from sdci.io.datasets import read_dataset, read_manifest, write_dataset
from sdci.io.tensor_files import check_version, read_tensor, write_tensor

__all__ = [
    "write_tensor",
    "read_tensor",
    "check_version",
    "write_dataset",
    "read_dataset",
    "read_manifest",
    "save_checkpoint",
    "load_checkpoint",
    "LoadedCheckpoint",
]
