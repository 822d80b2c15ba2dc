"""Online Kohonen training.

Each presentation picks one pattern, finds its best matching unit and pulls
every neuron towards the pattern by ``alpha(t) * h(bmu, j, sigma(t))``,
where ``h`` is a Gaussian over grid distance. Both ``alpha`` and ``sigma``
decay linearly over the ``P`` presentations, ``sigma`` towards 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    GridPosition,
    SomModel,
    WeightMatrix,
    bmu_batch,
    find_bmu,
    grid_distance,
    init_weights,
)
from .errors import ConfigError, DataFormatError, DimensionError
from .preprocessing import Dataset, NormalizationParams

SAMPLING_MODES = ("cyclic", "random")

# Neurons whose neighbourhood weight falls below this are left untouched.
# With inputs and weights in [0, 1] the skipped move is < 1e-6 per component.
NEIGHBORHOOD_CUTOFF = 1e-6

# Fixed salt separating the sampling stream from the initialisation stream.
_SAMPLING_STREAM = 0x5AD1


@dataclass(frozen=True)
class TrainingConfig:
    """Hyper-parameters of one training run.

    ``initial_radius`` defaults to ``side / 2`` (never below 1).
    """

    side: int
    presentations: int
    initial_learning_rate: float = 0.1
    initial_radius: Optional[float] = None
    seed: int = 0
    sampling: str = "random"

    def __post_init__(self):
        if isinstance(self.side, bool) or int(self.side) != self.side or self.side < 1:
            raise ConfigError(f"side must be a positive integer, got {self.side!r}")
        if int(self.presentations) != self.presentations or self.presentations < 1:
            raise ConfigError(f"presentations must be >= 1, got {self.presentations!r}")
        a0 = float(self.initial_learning_rate)
        if not (0.0 < a0 <= 1.0):
            raise ConfigError(f"initial learning rate must lie in (0, 1], got {a0}")
        r0 = max(self.side / 2.0, 1.0) if self.initial_radius is None else float(self.initial_radius)
        if not math.isfinite(r0) or r0 <= 0:
            raise ConfigError(f"initial radius must be > 0, got {r0}")
        if self.side > 1 and r0 < 1:
            raise ConfigError(f"initial radius must be >= 1 on maps wider than one neuron, got {r0}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.sampling not in SAMPLING_MODES:
            raise ConfigError(f"sampling must be one of {SAMPLING_MODES}, got {self.sampling!r}")
        object.__setattr__(self, "side", int(self.side))
        object.__setattr__(self, "presentations", int(self.presentations))
        object.__setattr__(self, "initial_learning_rate", a0)
        object.__setattr__(self, "initial_radius", r0)
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class TrainingMeta:
    """What a model remembers about how it was trained."""

    config: TrainingConfig
    presentations_completed: int


@dataclass(frozen=True)
class Checkpoint:
    t: int
    alpha: float
    sigma: float
    quantization_error: float


@dataclass
class TrainingTrace:
    checkpoints: list[Checkpoint] = field(default_factory=list)

    def to_csv_text(self) -> str:
        lines = ["t,alpha,sigma,quantization_error"]
        lines += [f"{c.t},{c.alpha!r},{c.sigma!r},{c.quantization_error!r}" for c in self.checkpoints]
        return "\n".join(lines) + "\n"

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv_text())


def _check_t(t, cfg):
    if not 0 <= t < cfg.presentations:
        raise ConfigError(f"presentation index {t} outside [0, {cfg.presentations})")


def learning_rate_at(t: int, cfg: TrainingConfig) -> float:
    _check_t(t, cfg)
    return cfg.initial_learning_rate * (1.0 - t / cfg.presentations)


def radius_at(t: int, cfg: TrainingConfig) -> float:
    _check_t(t, cfg)
    return 1.0 + (cfg.initial_radius - 1.0) * (1.0 - t / cfg.presentations)


def neighborhood_coefficient(bmu: GridPosition, node: GridPosition, sigma: float) -> float:
    if not sigma > 0:
        raise ConfigError(f"neighbourhood radius must be > 0, got {sigma}")
    d = grid_distance(bmu, node)
    return math.exp(-(d * d) / (2.0 * sigma * sigma))


class _Grid:
    """Cached row/col coordinates of every neuron, in flat-index order."""

    def __init__(self, side):
        self.side = side
        flat = np.arange(side * side)
        self.rows = (flat // side).astype(np.float64)
        self.cols = (flat % side).astype(np.float64)

    def kernel(self, bmu_flat, sigma):
        r, c = divmod(bmu_flat, self.side)
        d2 = (self.rows - r) ** 2 + (self.cols - c) ** 2
        return np.exp(-d2 / (2.0 * sigma * sigma))


def _apply_update(W, x, bmu_flat, alpha, sigma, grid):
    h = grid.kernel(bmu_flat, sigma)
    near = np.flatnonzero(h >= NEIGHBORHOOD_CUTOFF)
    # Update the contiguous flat-index band spanning the neighbourhood through
    # a view; skipped neurons inside it get a zero coefficient (w + 0 == w).
    lo, hi = near[0], near[-1] + 1
    coef = np.where(h[lo:hi] >= NEIGHBORHOOD_CUTOFF, alpha * h[lo:hi], 0.0)
    band = W[lo:hi]
    band += coef[:, None] * (x - band)


def update_step(wm: WeightMatrix, sample, t: int, cfg: TrainingConfig) -> WeightMatrix:
    """Apply presentation ``t`` of ``sample`` to ``wm`` in place."""
    x = np.asarray(sample, dtype=np.float64)
    if x.ndim != 1 or x.size != wm.dim:
        raise DimensionError(wm.dim, x.size if x.ndim == 1 else x.shape)
    if wm.side != cfg.side:
        raise ConfigError(f"map side {wm.side} does not match configured side {cfg.side}")
    bmu, _ = find_bmu(x, wm)
    _apply_update(
        wm.weights, x, bmu.flat_index,
        learning_rate_at(t, cfg), radius_at(t, cfg), _Grid(wm.side),
    )
    return wm


def _quantization_error(X, wm):
    return float(np.mean(bmu_batch(X, wm)[1]))


def _sampling_order(n_rows, cfg):
    if cfg.sampling == "cyclic":
        return np.arange(cfg.presentations) % n_rows
    rng = np.random.default_rng([cfg.seed, _SAMPLING_STREAM])
    return rng.integers(0, n_rows, size=cfg.presentations)


def train(
    ds: Dataset,
    cfg: TrainingConfig,
    normalization: Optional[NormalizationParams] = None,
) -> tuple[SomModel, TrainingTrace]:
    """Train a fresh map on already-normalized data.

    Args:
        ds: Normalized training set; every value must lie in ``[0, 1]``.
        cfg: Run configuration. The seed drives both weight initialisation
            and (through a derived stream) random pattern selection.
        normalization: Scaling that produced ``ds``, stored in the model so
            raw inputs can be classified later. Defaults to the identity.

    Returns:
        The frozen model and a trace with roughly 100 checkpoints.
    """
    X = ds.rows
    if X.shape[0] == 0:
        raise DataFormatError("cannot train on an empty dataset")
    if X.min() < 0.0 or X.max() > 1.0:
        raise DataFormatError("training data must be normalized to [0, 1]")
    if normalization is None:
        normalization = NormalizationParams.identity(ds.dim)
    if normalization.dim != ds.dim:
        raise DimensionError(ds.dim, normalization.dim, "normalization dimension")

    wm = init_weights(cfg.side, ds.dim, cfg.seed)
    W = wm.weights
    grid = _Grid(cfg.side)
    order = _sampling_order(X.shape[0], cfg)
    P = cfg.presentations
    every = max(1, P // 100)
    trace = TrainingTrace()

    for t in range(P):
        x = X[order[t]]
        d = W - x
        bmu = int(np.argmin(np.sum(d * d, axis=1)))
        alpha = learning_rate_at(t, cfg)
        sigma = radius_at(t, cfg)
        _apply_update(W, x, bmu, alpha, sigma, grid)
        if (t + 1) % every == 0 or t == P - 1:
            trace.checkpoints.append(Checkpoint(t, alpha, sigma, _quantization_error(X, wm)))

    model = SomModel(
        wm.freeze(), normalization, TrainingMeta(cfg, presentations_completed=P)
    )
    return model, trace
