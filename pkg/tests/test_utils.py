"""Test utilities and helper functions shared by the test suite."""
from pathlib import Path
from typing import Dict, Iterable, List

import numpy as np

from sdci.io.tensor_files import read_tensor, write_tensor
from sdci.simulators.dataset import Dataset, SplitArrays


def assert_split_equal(a: SplitArrays, b: SplitArrays) -> None:
    """Bit-exact equality of two splits."""
    assert a.p.dtype == b.p.dtype
    np.testing.assert_array_equal(a.p, b.p)
    np.testing.assert_array_equal(a.s, b.s)
    np.testing.assert_array_equal(a.graphs, b.graphs)
    np.testing.assert_array_equal(a.diverged, b.diverged)


def assert_dataset_equal(a: Dataset, b: Dataset) -> None:
    assert a.manifest == b.manifest
    assert set(a.splits) == set(b.splits)
    for split in a.splits:
        assert_split_equal(a.splits[split], b.splits[split])


def directory_bytes(root: Path) -> Dict[str, bytes]:
    """Every file below `root` keyed by relative path."""
    return {str(path.relative_to(root)): path.read_bytes() for path in sorted(root.rglob("*")) if path.is_file()}


def read_checkpoint_records(path: Path) -> tuple[bytes, List[tuple[str, np.ndarray]]]:
    """Metadata line and every (name, array) record of a checkpoint file."""
    records = []
    with open(path, "rb") as fh:
        meta_line = fh.readline()
        while True:
            position = fh.tell()
            if not fh.read(1):
                break
            fh.seek(position)
            header, array = read_tensor(fh)
            records.append((header.name, array))
    return meta_line, records


def rewrite_checkpoint(path: Path, meta_line: bytes, records: Iterable[tuple[str, np.ndarray]]) -> None:
    with open(path, "wb") as fh:
        fh.write(meta_line)
        for name, array in records:
            write_tensor(fh, name, array)


def random_logits(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return rng.normal(0.0, 2.0, size=shape)
