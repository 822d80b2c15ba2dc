"""Map quality metrics and the per-neuron report.

All metrics are measured in normalized space; codebook vectors in the report
are converted back to raw units.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classification import Assignments, activation_histogram
from .core import GridPosition, SomModel, bmu_batch, two_bmus_batch
from .errors import ConfigError, DataFormatError, DimensionError, SchemaError
from .preprocessing import Dataset, denormalize, normalize_rows


def _normalized(model: SomModel, ds: Dataset) -> np.ndarray:
    if len(ds) == 0:
        raise DataFormatError("metric needs at least one sample")
    if ds.dim != model.dim:
        raise DimensionError(model.dim, ds.dim)
    return normalize_rows(ds.rows, model.normalization)


def quantization_error(model: SomModel, ds: Dataset) -> float:
    """Mean distance from each (normalized) sample to its BMU weight."""
    X = _normalized(model, ds)
    return float(np.mean(bmu_batch(X, model.weight_matrix)[1]))


def topographic_error(model: SomModel, ds: Dataset) -> float:
    """Fraction of samples whose two nearest neurons are not grid neighbours.

    Neighbours are the 8-neighbourhood, i.e. Chebyshev distance 1 on
    ``(row, col)``.
    """
    if model.weight_matrix.n_neurons < 2:
        raise ConfigError("topographic error is undefined on a single-neuron map")
    X = _normalized(model, ds)
    pairs = two_bmus_batch(X, model.weight_matrix)
    r, c = np.divmod(pairs, model.side)
    cheb = np.maximum(np.abs(r[:, 0] - r[:, 1]), np.abs(c[:, 0] - c[:, 1]))
    return float(np.mean(cheb > 1))


def activation_density(a: Assignments) -> float:
    """Share of neurons that won at least one sample."""
    counts = a.activation_counts
    return float(np.count_nonzero(counts)) / counts.size


def u_matrix(model: SomModel) -> np.ndarray:
    """Mean weight distance from each neuron to its grid 8-neighbourhood."""
    k = model.side
    grid = model.weight_matrix.grid_view()
    total = np.zeros((k, k))
    count = np.zeros((k, k))
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            r0, r1 = max(0, -dr), min(k, k - dr)
            c0, c1 = max(0, -dc), min(k, k - dc)
            if r0 >= r1 or c0 >= c1:
                continue
            diff = grid[r0:r1, c0:c1] - grid[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
            total[r0:r1, c0:c1] += np.sqrt(np.sum(diff * diff, axis=2))
            count[r0:r1, c0:c1] += 1
    return np.divide(total, count, out=np.zeros((k, k)), where=count > 0)


@dataclass
class NeuronStats:
    position: GridPosition
    count: int
    mean_distance: Optional[float]
    weight: np.ndarray
    majority_label: Optional[str] = None
    purity: Optional[float] = None
    label_counts: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "flat_index": self.position.flat_index,
            "row": self.position.row,
            "col": self.position.col,
            "count": self.count,
            "mean_bmu_distance": self.mean_distance,
            "weight": [float(v) for v in self.weight],
            "majority_label": self.majority_label,
            "purity": self.purity,
            "label_counts": dict(sorted(self.label_counts.items())),
        }


@dataclass
class MapReport:
    side: int
    dim: int
    n_samples: int
    quantization_error: float
    topographic_error: Optional[float]
    activation_density: float
    histogram: dict
    per_neuron: list[NeuronStats]
    overall_purity: Optional[float] = None

    def to_dict(self):
        return {
            "side": self.side,
            "dim": self.dim,
            "n_samples": self.n_samples,
            "metrics": {
                "quantization_error": self.quantization_error,
                "topographic_error": self.topographic_error,
                "activation_density": self.activation_density,
            },
            "activation_histogram": {str(k): v for k, v in self.histogram.items()},
            "overall_purity": self.overall_purity,
            "per_neuron": [n.to_dict() for n in self.per_neuron],
        }

    def to_text(self) -> str:
        lines = [
            f"map {self.side}x{self.side}, dim {self.dim}, {self.n_samples} samples",
            f"quantization error   {self.quantization_error:.6f}",
            "topographic error    "
            + ("n/a" if self.topographic_error is None else f"{self.topographic_error:.6f}"),
            f"activation density   {self.activation_density:.6f}",
        ]
        if self.overall_purity is not None:
            lines.append(f"overall purity       {self.overall_purity:.6f}")
        lines.append("")
        lines.append(f"{'row':>4} {'col':>4} {'count':>7} {'mean_dist':>10}  majority (purity)")
        for n in self.per_neuron:
            md = "-" if n.mean_distance is None else f"{n.mean_distance:.4f}"
            maj = ""
            if n.majority_label is not None:
                maj = f"{n.majority_label} ({n.purity:.2f})"
            lines.append(
                f"{n.position.row:>4} {n.position.col:>4} {n.count:>7} {md:>10}  {maj}"
            )
        return "\n".join(lines) + "\n"


def _majority(counter: Counter):
    # Highest count wins; ties go to the lexicographically smallest label.
    label, n = min(counter.items(), key=lambda kv: (-kv[1], kv[0]))
    return label, n


def build_report(model: SomModel, a: Assignments, ds: Dataset) -> MapReport:
    """Aggregate metrics and per-neuron rows for ``a`` computed on ``ds``.

    Labels come from ``a`` when present, otherwise from ``ds``.
    """
    if len(a) != len(ds):
        raise SchemaError("assignments", f"{len(a)} assignments for {len(ds)} samples")
    if a.side != model.side:
        raise SchemaError("assignments", f"side {a.side} does not match model side {model.side}")
    labels = a.labels if a.labels is not None else ds.labels

    k2 = model.weight_matrix.n_neurons
    counts = a.activation_counts.reshape(-1)
    dist_sum = np.bincount(a.flat_index, weights=a.bmu_distance, minlength=k2)
    raw_weights = denormalize(model.weights, model.normalization)

    by_neuron = [Counter() for _ in range(k2)]
    if labels is not None:
        for f, label in zip(a.flat_index, labels):
            by_neuron[int(f)][label] += 1

    per_neuron = []
    majority_total = 0
    for j in range(k2):
        n = int(counts[j])
        stats = NeuronStats(
            position=GridPosition.from_flat(j, model.side),
            count=n,
            mean_distance=float(dist_sum[j] / n) if n else None,
            weight=raw_weights[j],
            label_counts=dict(by_neuron[j]),
        )
        if labels is not None and n:
            stats.majority_label, m = _majority(by_neuron[j])
            stats.purity = m / n
            majority_total += m
        per_neuron.append(stats)

    te = topographic_error(model, ds) if k2 >= 2 and len(ds) else None
    qe = float(np.mean(a.bmu_distance)) if len(a) else 0.0
    return MapReport(
        side=model.side,
        dim=model.dim,
        n_samples=len(a),
        quantization_error=qe,
        topographic_error=te,
        activation_density=activation_density(a),
        histogram=activation_histogram(a),
        per_neuron=per_neuron,
        overall_purity=(majority_total / len(a)) if labels is not None and len(a) else None,
    )
