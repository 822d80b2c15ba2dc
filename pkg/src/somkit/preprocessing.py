"""CSV ingestion, min-max scaling and per-feature statistics."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import DataFormatError, DimensionError


@dataclass
class Dataset:
    """Sample matrix (rows are samples) with optional labels and column names.

    Labels never enter the feature vectors; they ride along for reporting.
    """

    rows: np.ndarray
    labels: Optional[list[str]] = None
    column_names: Optional[list[str]] = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            raise DataFormatError(f"dataset rows must form a 2-D matrix, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise DataFormatError("dataset contains non-finite values")
        self.rows = rows
        if self.labels is not None:
            self.labels = [str(label) for label in self.labels]
            if len(self.labels) != rows.shape[0]:
                raise DataFormatError(
                    f"{len(self.labels)} labels for {rows.shape[0]} rows"
                )
        if self.column_names is not None:
            self.column_names = list(self.column_names)
            if len(self.column_names) != rows.shape[1]:
                raise DataFormatError(
                    f"{len(self.column_names)} column names for {rows.shape[1]} features"
                )

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def __len__(self):
        return self.rows.shape[0]


@dataclass(frozen=True)
class NormalizationParams:
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=np.float64).reshape(-1)
        maxs = np.asarray(self.maxs, dtype=np.float64).reshape(-1)
        if mins.shape != maxs.shape or mins.size == 0:
            raise DimensionError(mins.size, maxs.size, "normalization bounds")
        if not (np.all(np.isfinite(mins)) and np.all(np.isfinite(maxs))):
            raise DataFormatError("normalization bounds must be finite")
        if np.any(mins > maxs):
            raise DataFormatError("normalization requires min <= max for every feature")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @property
    def dim(self) -> int:
        return self.mins.size

    @property
    def degenerate(self) -> np.ndarray:
        return self.mins == self.maxs

    @classmethod
    def identity(cls, dim: int) -> "NormalizationParams":
        """Bounds ``[0, 1]`` on every feature: normalize is then a no-op."""
        return cls(np.zeros(dim), np.ones(dim))


def _resolve_label_column(label_column, header, width):
    if label_column is None:
        return None
    if isinstance(label_column, str):
        if header is not None and label_column in header:
            return header.index(label_column)
        try:
            idx = int(label_column)
        except ValueError:
            if header is None:
                raise DataFormatError(
                    f"label column {label_column!r} given by name but the file has no header"
                ) from None
            raise DataFormatError(f"label column {label_column!r} not found in header") from None
    else:
        idx = int(label_column)
    if not 0 <= idx < width:
        raise DataFormatError(f"label column index {idx} out of range for {width} columns")
    return idx


def load_csv(
    path: Union[str, Path],
    has_header: bool = False,
    label_column: Optional[Union[str, int]] = None,
    delimiter: str = ",",
) -> Dataset:
    """Read a numeric CSV file into a :class:`Dataset`.

    Args:
        path: UTF-8 text file, ``.`` as decimal point.
        has_header: Treat the first line as column names.
        label_column: Name (needs a header) or 0-based index of a column to
            pull out as string labels.
        delimiter: Field separator.

    Raises:
        DataFormatError: unreadable, empty, ragged or non-numeric input.
            Parse errors cite 1-based data row and column numbers.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            lines = [r for r in csv.reader(fh, delimiter=delimiter)]
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc

    numbered = [(i + 1, r) for i, r in enumerate(lines) if any(cell.strip() for cell in r)]
    header = None
    if has_header:
        if not numbered:
            raise DataFormatError(f"{path}: empty file")
        header = [cell.strip() for cell in numbered[0][1]]
        numbered = numbered[1:]
    if not numbered:
        raise DataFormatError(f"{path}: no data rows")

    width = len(header) if header is not None else len(numbered[0][1])
    label_idx = _resolve_label_column(label_column, header, width)

    values = []
    labels = [] if label_idx is not None else None
    for data_row, (line_no, cells) in enumerate(numbered, start=1):
        if len(cells) != width:
            raise DataFormatError(
                f"{path}: row {data_row} (line {line_no}) has {len(cells)} fields, expected {width}"
            )
        vec = []
        for col, cell in enumerate(cells, start=1):
            if col - 1 == label_idx:
                labels.append(cell.strip())
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataFormatError(
                    f"{path}: non-numeric value {cell!r} at row {data_row}, column {col} "
                    f"(line {line_no})"
                ) from None
            if not math.isfinite(v):
                raise DataFormatError(
                    f"{path}: non-finite value at row {data_row}, column {col} (line {line_no})"
                )
            vec.append(v)
        values.append(vec)

    if width - (label_idx is not None) < 1:
        raise DataFormatError(f"{path}: no feature columns")
    names = None
    if header is not None:
        names = [h for i, h in enumerate(header) if i != label_idx]
    return Dataset(np.array(values, dtype=np.float64), labels, names)


def fit_normalization(ds: Dataset) -> NormalizationParams:
    if len(ds) == 0:
        raise DataFormatError("cannot fit normalization on an empty dataset")
    return NormalizationParams(ds.rows.min(axis=0), ds.rows.max(axis=0))


def normalize_rows(rows, p: NormalizationParams) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[-1] != p.dim:
        raise DimensionError(p.dim, rows.shape[-1])
    span = p.maxs - p.mins
    degenerate = span == 0
    out = (rows - p.mins) / np.where(degenerate, 1.0, span)
    # Constant features carry no information; pin them to 0.
    return np.where(degenerate, 0.0, out)


def normalize(ds: Dataset, p: NormalizationParams) -> Dataset:
    """Min-max scale ``ds`` with ``p``. Values outside the fitted range are not clamped."""
    return Dataset(normalize_rows(ds.rows, p), ds.labels, ds.column_names)


def denormalize(v, p: NormalizationParams) -> np.ndarray:
    """Map normalized values back to raw units (degenerate features give the stored min).

    Accepts a single vector or a matrix of row vectors.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != p.dim:
        raise DimensionError(p.dim, v.shape[-1])
    out = p.mins + v * (p.maxs - p.mins)
    return np.where(p.degenerate, p.mins, out)


def summarize(ds: Dataset) -> list[dict]:
    """Population min, max, mean and standard deviation per feature."""
    if len(ds) == 0:
        raise DataFormatError("cannot summarize an empty dataset")
    names = ds.column_names or [f"x{i}" for i in range(ds.dim)]
    rows = ds.rows
    lo = rows.min(axis=0)
    hi = rows.max(axis=0)
    constant = lo == hi
    # Pairwise summation can leave rounding residue on a constant column.
    mean = np.where(constant, lo, rows.mean(axis=0))
    std = np.where(constant, 0.0, rows.std(axis=0))
    return [
        {
            "name": names[j],
            "min": float(lo[j]),
            "max": float(hi[j]),
            "mean": float(mean[j]),
            "std": float(std[j]),
        }
        for j in range(ds.dim)
    ]

