"""
JSON / CSV artifacts written by the CLI.

Every JSON document carries the resolved config and the library version so an
output can be traced back to the run that produced it.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, Mapping

import numpy as np
import pandas as pd

from solvers import __version__
from solvers.errors import CorruptFileError
from storage.nmat import PathLike

POSITION_COLUMNS = ["x_mm", "y_mm", "z_mm"]


def to_jsonable(value: Any) -> Any:
    """Plain-Python view of numpy containers; non-finite floats become null."""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(path: PathLike, payload: Dict[str, Any], config: Mapping[str, Any]) -> None:
    doc = dict(payload)
    doc["provenance"] = {"version": __version__, "config": config}
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_jsonable(doc), f, indent=2, sort_keys=True, allow_nan=False)
        f.write("\n")


def read_json(path: PathLike) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise CorruptFileError(f"{path}: {exc}") from exc


def write_positions(path: PathLike, positions: np.ndarray) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(np.asarray(positions, dtype=float), columns=POSITION_COLUMNS).to_csv(
        path, index=False, float_format="%.17g"
    )


def read_positions(path: PathLike) -> np.ndarray:
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise CorruptFileError(f"{path}: {exc}") from exc
    if list(df.columns) != POSITION_COLUMNS:
        raise CorruptFileError(f"{path}: expected columns {POSITION_COLUMNS}, got {list(df.columns)}")
    return df.to_numpy(dtype=float)


def write_table(path: PathLike, df: pd.DataFrame, index: bool = False) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=index, float_format="%.17g")
