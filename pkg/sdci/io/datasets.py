"""Dataset container: ``manifest.json`` plus one tensor file per split and field."""

import json
import logging
from pathlib import Path
from typing import Dict, Union

import numpy as np
from pydantic import ValidationError

from sdci.io.tensor_files import check_version, read_tensor, write_tensor
from sdci.schemas.artifacts import DatasetManifest
from sdci.simulators.dataset import Dataset, SplitArrays
from sdci.utils.error_handling import DatasetCorruptionError, log_operation_start, log_operation_success

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
FIELDS = {"p": "p", "s": "s", "graph": "graphs", "diverged": "diverged"}
FIELD_DTYPES = {"p": np.float32, "s": np.uint8, "graph": np.uint8, "diverged": np.uint8}


def tensor_path(root: Path, split: str, field: str) -> Path:
    return root / f"{split}.{field}.bin"


def write_dataset(dataset: Dataset, out_dir: Union[str, Path]) -> Path:
    """Write manifest and tensor files; the same dataset always yields the same bytes."""
    root = Path(out_dir)
    log_operation_start("write dataset", path=str(root))
    root.mkdir(parents=True, exist_ok=True)
    (root / MANIFEST).write_text(dataset.manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    for split, arrays in dataset.splits.items():
        for field, attr in FIELDS.items():
            with open(tensor_path(root, split, field), "wb") as fh:
                write_tensor(fh, f"{split}.{field}", np.asarray(getattr(arrays, attr), dtype=FIELD_DTYPES[field]))
    log_operation_success("write dataset", path=str(root), splits=dataset.manifest.splits)
    return root


def read_manifest(root: Union[str, Path]) -> DatasetManifest:
    path = Path(root) / MANIFEST
    if not path.exists():
        raise DatasetCorruptionError(f"dataset manifest not found at {path}", tensor=MANIFEST)
    raw = json.loads(path.read_text(encoding="utf-8"))
    check_version(raw.get("format_version", "0"), "dataset manifest")
    try:
        return DatasetManifest.model_validate(raw)
    except ValidationError as e:
        raise DatasetCorruptionError(f"invalid dataset manifest: {e}", tensor=MANIFEST) from None


def _read_field(root: Path, split: str, field: str) -> np.ndarray:
    name = f"{split}.{field}"
    path = tensor_path(root, split, field)
    if not path.exists():
        raise DatasetCorruptionError(f"tensor file for {name!r} is missing", tensor=name)
    with open(path, "rb") as fh:
        header, array = read_tensor(fh, DatasetCorruptionError, expected=name)
        if fh.read(1):
            raise DatasetCorruptionError(f"tensor {name!r} has trailing bytes", tensor=name)
    if header.name != name:
        raise DatasetCorruptionError(f"expected tensor {name!r}, found {header.name!r}", tensor=name)
    return array


def read_dataset(root: Union[str, Path]) -> Dataset:
    """Read a dataset container, validating shapes against the manifest."""
    root = Path(root)
    manifest = read_manifest(root)
    t, n, d, k = manifest.num_timesteps, manifest.num_objects, manifest.dims, manifest.num_states
    splits: Dict[str, SplitArrays] = {}
    for split, count in manifest.splits.items():
        fields = {field: _read_field(root, split, field) for field in FIELDS}
        expected = {
            "p": (count, t, n, d),
            "s": (count, t, n),
            "graph": (count, k, n, n),
            "diverged": (count,),
        }
        for field, shape in expected.items():
            if fields[field].shape != shape:
                raise DatasetCorruptionError(
                    f"tensor {split}.{field} has shape {fields[field].shape}, manifest implies {shape}",
                    tensor=f"{split}.{field}",
                )
        splits[split] = SplitArrays(
            p=fields["p"], s=fields["s"], graphs=fields["graph"], diverged=fields["diverged"].astype(bool)
        )
    logger.info(f"Loaded dataset from {root}", extra={"splits": manifest.splits})
    return Dataset(manifest=manifest, splits=splits)
