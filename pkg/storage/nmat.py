"""
Dense matrix files.

NMAT layout (all little-endian):
  b"NMAT" | version u32 = 1 | rows u64 | cols u64 | rows*cols float64, row-major

CSV is accepted as an input alternative for hand-written fixtures: the first
line holds "rows,cols", then one comma-separated line per row.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from solvers.errors import CorruptFileError

MAGIC = b"NMAT"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")

PathLike = Union[str, os.PathLike]


def encode_nmat(A: np.ndarray) -> bytes:
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValueError(f"NMAT stores 2-D matrices, got shape {A.shape}")
    rows, cols = A.shape
    if rows == 0 or cols == 0:
        raise ValueError(f"NMAT rejects empty matrices, got shape {A.shape}")
    payload = np.ascontiguousarray(A, dtype="<f8").tobytes(order="C")
    return _HEADER.pack(MAGIC, VERSION, rows, cols) + payload


def decode_nmat(blob: bytes) -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise CorruptFileError(f"NMAT header truncated ({len(blob)} bytes)")
    magic, version, rows, cols = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CorruptFileError(f"bad NMAT magic {magic!r}")
    if version != VERSION:
        raise CorruptFileError(f"unsupported NMAT version {version}")
    if rows == 0 or cols == 0:
        raise CorruptFileError(f"NMAT declares an empty matrix ({rows}x{cols})")
    expected = _HEADER.size + 8 * rows * cols
    if len(blob) != expected:
        raise CorruptFileError(f"NMAT payload is {len(blob)} bytes, expected {expected}")
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size, count=rows * cols)
    return data.reshape(rows, cols).astype(float)


def write_nmat(path: PathLike, A: np.ndarray) -> None:
    blob = encode_nmat(A)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(blob)


def read_nmat(path: PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        return decode_nmat(f.read())


def read_csv_matrix(path: PathLike) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
    try:
        rows, cols = (int(v) for v in header.split(","))
    except ValueError as exc:
        raise CorruptFileError(f"{path}: first line must be 'rows,cols', got {header!r}") from exc
    if rows == 0 or cols == 0:
        raise CorruptFileError(f"{path}: empty matrix ({rows}x{cols})")
    try:
        df = pd.read_csv(path, header=None, skiprows=1, dtype=float, float_precision="round_trip")
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise CorruptFileError(f"{path}: {exc}") from exc
    A = df.to_numpy(dtype=float)
    if A.shape != (rows, cols):
        raise CorruptFileError(f"{path}: header says {rows}x{cols}, data is {A.shape[0]}x{A.shape[1]}")
    return A


def read_matrix(path: PathLike) -> np.ndarray:
    """Load an .nmat or .csv matrix, chosen by file suffix."""
    if Path(path).suffix.lower() == ".csv":
        return read_csv_matrix(path)
    return read_nmat(path)
