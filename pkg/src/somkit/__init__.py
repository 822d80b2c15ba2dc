"""Self-organizing (Kohonen) maps: train, classify, measure, persist, plot."""

from .analytics import (
    MapReport,
    activation_density,
    build_report,
    quantization_error,
    topographic_error,
    u_matrix,
)
from .classification import Assignments, activation_histogram, classify, read_assignments
from .core import (
    GridPosition,
    SomModel,
    WeightMatrix,
    euclidean_distance,
    find_bmu,
    find_two_bmus,
    grid_distance,
    init_weights,
)
from .errors import (
    ConfigError,
    DataFormatError,
    DimensionError,
    InvariantViolation,
    SchemaError,
    SomError,
)
from .persistence import load_model, model_from_json, model_to_json, save_model
from .preprocessing import (
    Dataset,
    NormalizationParams,
    denormalize,
    fit_normalization,
    load_csv,
    normalize,
    summarize,
)
from .training import (
    TrainingConfig,
    TrainingTrace,
    learning_rate_at,
    neighborhood_coefficient,
    radius_at,
    train,
    update_step,
)

__version__ = "0.1.0"
