"""Mapping samples onto a trained map without touching its weights."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import GridPosition, SomModel, bmu_batch
from .errors import DataFormatError, DimensionError, InvariantViolation, SchemaError
from .preprocessing import Dataset, normalize_rows

ASSIGNMENT_COLUMNS = ("sample_index", "row", "col", "flat_index", "bmu_distance", "label")


@dataclass
class Assignments:
    """Per-sample winners plus the per-neuron activation counts they imply."""

    side: int
    flat_index: np.ndarray
    bmu_distance: np.ndarray
    labels: Optional[list[str]] = None

    def __post_init__(self):
        self.flat_index = np.asarray(self.flat_index, dtype=np.int64).reshape(-1)
        self.bmu_distance = np.asarray(self.bmu_distance, dtype=np.float64).reshape(-1)
        n = self.flat_index.size
        if self.bmu_distance.size != n:
            raise SchemaError("bmu_distance", f"{self.bmu_distance.size} distances for {n} samples")
        if n and (self.flat_index.min() < 0 or self.flat_index.max() >= self.side * self.side):
            raise SchemaError("flat_index", f"index outside a {self.side}x{self.side} grid")
        if n and not (np.all(np.isfinite(self.bmu_distance)) and self.bmu_distance.min() >= 0):
            raise SchemaError("bmu_distance", "distances must be finite and non-negative")
        if self.labels is not None and len(self.labels) != n:
            raise SchemaError("label", f"{len(self.labels)} labels for {n} samples")

    def __len__(self):
        return self.flat_index.size

    @property
    def rows(self) -> np.ndarray:
        return self.flat_index // self.side

    @property
    def cols(self) -> np.ndarray:
        return self.flat_index % self.side

    def position(self, i: int) -> GridPosition:
        return GridPosition.from_flat(int(self.flat_index[i]), self.side)

    @property
    def activation_counts(self) -> np.ndarray:
        """``side x side`` integer grid of how often each neuron won."""
        counts = np.bincount(self.flat_index, minlength=self.side * self.side)
        return counts.reshape(self.side, self.side)

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ASSIGNMENT_COLUMNS)
        rows, cols = self.rows, self.cols
        for i in range(len(self)):
            label = self.labels[i] if self.labels is not None else ""
            w.writerow([
                i, int(rows[i]), int(cols[i]), int(self.flat_index[i]),
                repr(float(self.bmu_distance[i])), label,
            ])
        return buf.getvalue()

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv_text())


def read_assignments(path, side: int) -> Assignments:
    """Load an assignments CSV and check it against a ``side x side`` map.

    Raises:
        SchemaError: wrong header, out-of-grid or self-inconsistent positions,
            or sample indices that are not ``0..N-1`` in order.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            records = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError, csv.Error) as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    if not records or tuple(c.strip() for c in records[0]) != ASSIGNMENT_COLUMNS:
        raise SchemaError("header", f"expected {','.join(ASSIGNMENT_COLUMNS)}")
    flat, dist, labels = [], [], []
    for n, rec in enumerate(records[1:]):
        if not rec:
            continue
        if len(rec) != len(ASSIGNMENT_COLUMNS):
            raise SchemaError("row", f"data row {n + 1} has {len(rec)} fields")
        try:
            idx, r, c, f = (int(v) for v in rec[:4])
            d = float(rec[4])
        except ValueError:
            raise SchemaError("row", f"data row {n + 1} is not numeric") from None
        if idx != len(flat):
            raise SchemaError("sample_index", f"expected {len(flat)}, got {idx}")
        if not (0 <= r < side and 0 <= c < side) or f != r * side + c:
            raise SchemaError("flat_index", f"data row {n + 1}: ({r}, {c}, {f}) invalid for side {side}")
        flat.append(f)
        dist.append(d)
        labels.append(rec[5])
    has_labels = any(labels)
    return Assignments(side, np.array(flat, dtype=np.int64), np.array(dist), labels if has_labels else None)


def classify(model: SomModel, ds: Dataset) -> Assignments:
    """Find the winning neuron of every row of ``ds`` (raw units).

    Rows are scaled with the model's stored normalization first; values
    outside the training range are not clamped.
    """
    if len(ds) == 0:
        raise DataFormatError("cannot classify an empty dataset")
    if ds.dim != model.dim:
        raise DimensionError(model.dim, ds.dim, "data dimension (model vs input)")
    before = model.weight_matrix.checksum()
    X = normalize_rows(ds.rows, model.normalization)
    flat, dist = bmu_batch(X, model.weight_matrix)
    if model.weight_matrix.checksum() != before:
        raise InvariantViolation("classification modified the model weights")
    return Assignments(model.side, flat, dist, ds.labels)


def activation_histogram(a: Assignments) -> dict[int, int]:
    """Map each observed activation count to the number of neurons with it.

    The ``0`` key is always present (possibly with value 0), so the values
    sum to ``side * side``.
    """
    counts = a.activation_counts.reshape(-1)
    hist = Counter(int(c) for c in counts)
    hist.setdefault(0, 0)
    return dict(sorted(hist.items()))
