"""
Tensor records: one JSON header line followed by the raw little-endian payload.

    {"name": "train.p", "dtype": "<f4", "shape": [1000, 40, 3, 1], "format_version": "1.0"}\\n
    <prod(shape) * itemsize bytes>
"""

import json
from typing import BinaryIO, Optional, Type

import numpy as np
from pydantic import ValidationError

from sdci import config
from sdci.schemas.artifacts import TensorHeader
from sdci.utils.error_handling import DatasetCorruptionError, SDCIError, UnsupportedVersionError

_DTYPES = {
    np.dtype(np.float32): "<f4",
    np.dtype(np.float64): "<f8",
    np.dtype(np.uint8): "|u1",
    np.dtype(np.int64): "<i8",
}


def check_version(version: str, what: str) -> None:
    """Reject files written by a newer major version."""
    try:
        major = int(str(version).split(".")[0])
    except ValueError:
        raise UnsupportedVersionError(f"{what} has malformed format version {version!r}", operation="read") from None
    supported = int(config.FORMAT_VERSION.split(".")[0])
    if major > supported:
        raise UnsupportedVersionError(
            f"{what} uses format version {version}; this reader supports up to {supported}.x",
            operation="read",
            found=version,
        )


def write_tensor(fh: BinaryIO, name: str, array: np.ndarray) -> None:
    array = np.asarray(array)
    if array.dtype == np.bool_:
        array = array.astype(np.uint8)
    try:
        dtype = _DTYPES[np.dtype(array.dtype).newbyteorder("=")]
    except KeyError:
        raise SDCIError(f"cannot store dtype {array.dtype} for tensor {name!r}", operation="write tensor") from None
    header = TensorHeader(name=name, dtype=dtype, shape=list(array.shape), format_version=config.FORMAT_VERSION)
    fh.write((header.model_dump_json() + "\n").encode("utf-8"))
    fh.write(np.ascontiguousarray(array, dtype=np.dtype(dtype)).tobytes())


def read_tensor(
    fh: BinaryIO, error_cls: Type[SDCIError] = DatasetCorruptionError, expected: Optional[str] = None
) -> tuple[TensorHeader, np.ndarray]:
    """Read one record; truncation or a malformed header raises `error_cls` naming the tensor."""
    line = fh.readline()
    if not line:
        raise error_cls(f"missing tensor record {expected!r}" if expected else "missing tensor record", tensor=expected)
    try:
        header = TensorHeader.model_validate(json.loads(line.decode("utf-8")))
    except (ValueError, ValidationError) as e:
        raise error_cls(f"malformed tensor header: {e}", tensor=expected) from None
    check_version(header.format_version, f"tensor {header.name!r}")
    dtype = np.dtype(header.dtype)
    count = int(np.prod(header.shape, dtype=np.int64)) if header.shape else 1
    nbytes = count * dtype.itemsize
    payload = fh.read(nbytes)
    if len(payload) != nbytes:
        raise error_cls(
            f"tensor {header.name!r} is truncated: expected {nbytes} bytes, found {len(payload)}",
            tensor=header.name,
        )
    array = np.frombuffer(payload, dtype=dtype).reshape(header.shape).astype(dtype.newbyteorder("="))
    return header, array
