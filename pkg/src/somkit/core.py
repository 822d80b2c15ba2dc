"""Grid geometry, weight storage and best-matching-unit search.

Weights are stored row-major: neuron ``(row, col)`` of a ``side x side`` map
lives at ``flat_index = row * side + col`` of a ``(side * side, dim)`` array.
Every module (training, persistence, plots) relies on this single layout.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import ConfigError, DimensionError, InvariantViolation, SchemaError

if TYPE_CHECKING:
    from .preprocessing import NormalizationParams
    from .training import TrainingMeta

# Rows of the batch search are processed in blocks so the (rows, neurons)
# distance table stays small regardless of dataset size.
_BATCH_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class GridPosition:
    """A neuron's place on a square ``side x side`` grid."""

    row: int
    col: int
    side: int

    def __post_init__(self):
        if self.side < 1:
            raise ConfigError(f"grid side must be >= 1, got {self.side}")
        if not (0 <= self.row < self.side and 0 <= self.col < self.side):
            raise ValueError(
                f"position ({self.row}, {self.col}) outside a {self.side}x{self.side} grid"
            )

    @property
    def flat_index(self) -> int:
        return self.row * self.side + self.col

    @classmethod
    def from_flat(cls, flat_index: int, side: int) -> "GridPosition":
        if not 0 <= flat_index < side * side:
            raise ValueError(f"flat index {flat_index} outside a {side}x{side} grid")
        row, col = divmod(int(flat_index), side)
        return cls(row, col, side)

    def as_tuple(self):
        return (self.row, self.col)


@dataclass
class WeightMatrix:
    """The codebook: one ``dim``-vector per neuron, indexed by flat index."""

    side: int
    dim: int
    weights: np.ndarray

    def __post_init__(self):
        if self.side < 1 or self.dim < 1:
            raise ConfigError(f"side and dim must be >= 1, got side={self.side}, dim={self.dim}")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.side * self.side, self.dim):
            raise SchemaError(
                "weights",
                f"expected shape ({self.side * self.side}, {self.dim}), got {w.shape}",
            )
        if not np.all(np.isfinite(w)):
            raise SchemaError("weights", "all components must be finite")
        self.weights = w

    @property
    def n_neurons(self) -> int:
        return self.side * self.side

    def vector(self, pos: GridPosition) -> np.ndarray:
        return self.weights[pos.flat_index]

    def grid_view(self) -> np.ndarray:
        """Return the weights reshaped to ``(side, side, dim)``."""
        return self.weights.reshape(self.side, self.side, self.dim)

    def freeze(self) -> "WeightMatrix":
        self.weights.setflags(write=False)
        return self

    def copy(self) -> "WeightMatrix":
        return WeightMatrix(self.side, self.dim, self.weights.copy())

    def checksum(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.weights).tobytes()).hexdigest()


@dataclass
class SomModel:
    """A trained feature map together with the scaling it was trained under."""

    weight_matrix: WeightMatrix
    normalization: "NormalizationParams"
    training_meta: Optional["TrainingMeta"] = None
    format_version: int = field(default=1)

    def __post_init__(self):
        if self.normalization.dim != self.weight_matrix.dim:
            raise DimensionError(
                self.weight_matrix.dim, self.normalization.dim, "normalization dimension"
            )
        meta = self.training_meta
        if meta is not None and meta.presentations_completed > meta.config.presentations:
            raise InvariantViolation(
                f"{meta.presentations_completed} presentations completed, "
                f"only {meta.config.presentations} configured"
            )

    @property
    def side(self) -> int:
        return self.weight_matrix.side

    @property
    def dim(self) -> int:
        return self.weight_matrix.dim

    @property
    def weights(self) -> np.ndarray:
        return self.weight_matrix.weights


def _as_vector(a) -> np.ndarray:
    v = np.asarray(a, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    return v


def euclidean_distance(a, b) -> float:
    """Euclidean distance between two equal-length vectors."""
    a = _as_vector(a)
    b = _as_vector(b)
    if a.size != b.size:
        raise DimensionError(a.size, b.size)
    # hypot scales internally, so tiny differences do not underflow to 0.
    return math.hypot(*(a - b).tolist())


def _squared_distances(sample: np.ndarray, wm: WeightMatrix) -> np.ndarray:
    x = _as_vector(sample)
    if x.size != wm.dim:
        raise DimensionError(wm.dim, x.size)
    d = wm.weights - x
    return np.sum(d * d, axis=1)


def find_bmu(sample, wm: WeightMatrix) -> tuple[GridPosition, float]:
    """Return the best matching unit for ``sample`` and its distance.

    Ties go to the smallest flat index (``np.argmin`` returns the first
    minimum).
    """
    d2 = _squared_distances(sample, wm)
    j = int(np.argmin(d2))
    return GridPosition.from_flat(j, wm.side), math.sqrt(float(d2[j]))


def find_two_bmus(sample, wm: WeightMatrix) -> tuple[GridPosition, GridPosition]:
    """Return the nearest and second-nearest neurons (ties by flat index)."""
    if wm.n_neurons < 2:
        raise ConfigError("a map needs at least two neurons for a second BMU")
    d2 = _squared_distances(sample, wm)
    order = np.argsort(d2, kind="stable")
    return (
        GridPosition.from_flat(int(order[0]), wm.side),
        GridPosition.from_flat(int(order[1]), wm.side),
    )


def grid_distance(p: GridPosition, q: GridPosition) -> float:
    if p.side != q.side:
        raise ValueError(f"positions belong to different grids ({p.side} vs {q.side})")
    return math.hypot(p.row - q.row, p.col - q.col)


def init_weights(side: int, dim: int, seed: int) -> WeightMatrix:
    """Seeded i.i.d. uniform ``[0, 1)`` weights."""
    if side < 1 or dim < 1:
        raise ConfigError(f"side and dim must be >= 1, got side={side}, dim={dim}")
    rng = np.random.default_rng(seed)
    return WeightMatrix(side, dim, rng.random((side * side, dim)))


def _nearest_batch(X: np.ndarray, W: np.ndarray, n_best: int):
    """Exact ``n_best`` nearest neurons for every row of ``X``.

    A matrix-product expansion of the squared distance shortlists candidates;
    every candidate within the expansion's rounding margin of the cut-off is
    then re-scored with the direct ``sum((w - x)**2)`` used by
    :func:`find_bmu`, so results match the per-sample scan exactly,
    tie-break included.

    Returns ``(indices, sq_distances)``, each of shape ``(len(X), n_best)``.
    """
    n_rows = X.shape[0]
    idx = np.empty((n_rows, n_best), dtype=np.int64)
    dist2 = np.empty((n_rows, n_best), dtype=np.float64)
    if n_rows == 0:
        return idx, dist2
    w_sq = np.einsum("ij,ij->i", W, W)
    w_max = float(w_sq.max())
    block = max(1, _BATCH_ELEMENTS // max(1, W.shape[0]))
    for start in range(0, n_rows, block):
        xb = X[start:start + block]
        x_sq = np.einsum("ij,ij->i", xb, xb)
        approx = x_sq[:, None] - 2.0 * (xb @ W.T) + w_sq[None, :]
        if n_best == 1:
            cut = approx.min(axis=1)
        else:
            cut = np.partition(approx, n_best - 1, axis=1)[:, n_best - 1]
        margin = 1e-9 * (x_sq + w_max) + 1e-300
        cand = approx <= (cut + margin)[:, None]
        counts = cand.sum(axis=1)

        simple = np.flatnonzero(counts == n_best)
        if simple.size:
            c = np.nonzero(cand[simple])[1].reshape(-1, n_best)
            d = W[c] - xb[simple][:, None, :]
            exact = np.sum(d * d, axis=2)
            order = np.argsort(exact, axis=1, kind="stable")
            idx[start + simple] = np.take_along_axis(c, order, axis=1)
            dist2[start + simple] = np.take_along_axis(exact, order, axis=1)

        for i in np.flatnonzero(counts != n_best):
            c = np.flatnonzero(cand[i])
            d = W[c] - xb[i]
            exact = np.sum(d * d, axis=1)
            order = np.argsort(exact, kind="stable")[:n_best]
            idx[start + i] = c[order]
            dist2[start + i] = exact[order]
    return idx, dist2


def bmu_batch(X, wm: WeightMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`find_bmu` over the rows of ``X``.

    Returns flat indices and true Euclidean distances.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != wm.dim:
        raise DimensionError(wm.dim, X.shape[-1] if X.ndim == 2 else X.shape)
    idx, d2 = _nearest_batch(X, wm.weights, 1)
    return idx[:, 0], np.sqrt(d2[:, 0])


def two_bmus_batch(X, wm: WeightMatrix) -> np.ndarray:
    """Vectorised :func:`find_two_bmus`; returns an ``(N, 2)`` flat-index array."""
    if wm.n_neurons < 2:
        raise ConfigError("a map needs at least two neurons for a second BMU")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != wm.dim:
        raise DimensionError(wm.dim, X.shape[-1] if X.ndim == 2 else X.shape)
    idx, _ = _nearest_batch(X, wm.weights, 2)
    return idx
