"""
CSV and JSON files.

- Dataset:     header x1,...,xp,y[,w], one row per sample
- ParamBlocks: header component,coord1,...,coordp, components labelled 1..k
- Grid:        mode,k,p,n,sigma,method,trials,median_error,finite_trials
"""

import json
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd

from maxlin.core.model import Dataset, ParamBlocks

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"
GRID_COLUMNS = ["mode", "k", "p", "n", "sigma", "method", "trials", "median_error", "finite_trials"]


class FormatError(ValueError):
    """A file does not follow the expected CSV/JSON layout."""


def _read_csv(path: PathLike) -> pd.DataFrame:
    try:
        return pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc


def _numbered(columns, prefix: str) -> int:
    """Count of leading columns named prefix1, prefix2, ... in order."""
    count = 0
    for col in columns:
        if col != f"{prefix}{count + 1}":
            break
        count += 1
    return count


def _numeric(frame: pd.DataFrame, path: PathLike) -> np.ndarray:
    try:
        values = frame.to_numpy(dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: non-numeric entries ({exc})") from exc
    if not np.all(np.isfinite(values)):
        raise FormatError(f"{path}: entries must be finite")
    return values


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------

def write_dataset(data: Dataset, path: PathLike) -> Path:
    path = Path(path)
    frame = pd.DataFrame(data.X, columns=[f"x{i + 1}" for i in range(data.p)])
    frame["y"] = data.y
    if data.w is not None:
        frame["w"] = data.w
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_dataset(path: PathLike) -> Dataset:
    frame = _read_csv(path)
    columns = list(frame.columns)
    p = _numbered(columns, "x")
    rest = columns[p:]
    if p == 0 or rest not in (["y"], ["y", "w"]):
        raise FormatError(f"{path}: expected header x1,...,xp,y[,w], got {','.join(columns)}")
    if frame.empty:
        raise FormatError(f"{path}: no samples")
    values = _numeric(frame, path)
    w = values[:, p + 1] if rest == ["y", "w"] else None
    return Dataset(values[:, :p], values[:, p], w)


# ---------------------------------------------------------------------------
# ParamBlocks
# ---------------------------------------------------------------------------

def write_param_blocks(beta: ParamBlocks, path: PathLike) -> Path:
    path = Path(path)
    frame = pd.DataFrame(beta.blocks, columns=[f"coord{i + 1}" for i in range(beta.p)])
    frame.insert(0, "component", np.arange(1, beta.k + 1))
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_param_blocks(path: PathLike) -> ParamBlocks:
    frame = _read_csv(path)
    columns = list(frame.columns)
    if not columns or columns[0] != "component":
        raise FormatError(f"{path}: expected header component,coord1,...,coordp")
    p = _numbered(columns[1:], "coord")
    if p == 0 or p != len(columns) - 1:
        raise FormatError(f"{path}: expected header component,coord1,...,coordp, got {','.join(columns)}")
    if frame.empty:
        raise FormatError(f"{path}: no components")
    values = _numeric(frame, path)
    if not np.array_equal(values[:, 0], np.arange(1, len(frame) + 1)):
        raise FormatError(f"{path}: components must be numbered 1..k in order")
    return ParamBlocks.from_blocks(values[:, 1:])


# ---------------------------------------------------------------------------
# Grid results
# ---------------------------------------------------------------------------

def write_grid_csv(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    frame[GRID_COLUMNS].to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_grid_csv(path: PathLike) -> pd.DataFrame:
    frame = _read_csv(path)
    if list(frame.columns) != GRID_COLUMNS:
        raise FormatError(f"{path}: expected columns {','.join(GRID_COLUMNS)}")
    try:
        for col in ("k", "p", "n", "trials", "finite_trials"):
            frame[col] = frame[col].astype(np.int64)
        for col in ("sigma", "median_error"):
            frame[col] = frame[col].astype(np.float64)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    frame["mode"] = frame["mode"].astype(str)
    frame["method"] = frame["method"].astype(str)
    return frame


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _jsonable(value: Any) -> Any:
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else ("inf" if value > 0 else "-inf" if value < 0 else "nan")
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    return str(value)


def write_json(obj: Any, path: PathLike) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_sanitize(obj), f, indent=2)
        f.write("\n")
    return path


def _sanitize(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    return _jsonable(obj)
