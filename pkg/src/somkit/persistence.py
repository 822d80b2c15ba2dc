"""Canonical JSON model files.

Layout (keys always in this order, one weight row per line)::

    {
    "format_version": 1,
    "side": 2,
    "dim": 1,
    "normalization": {"mins":[0.0],"maxs":[255.0],"degenerate_flags":[false]},
    "training_meta": {"presentations":100,...} or null,
    "weights": [
    [0.1],
    ...
    ]
    }

Floats are written with Python's shortest round-trip ``repr``, so loading a
saved model reproduces every weight bit for bit and saving the same model
twice yields identical bytes.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .core import SomModel, WeightMatrix
from .errors import ConfigError, DataFormatError, SchemaError, SomError
from .preprocessing import NormalizationParams
from .training import TrainingConfig, TrainingMeta

FORMAT_VERSION = 1

_META_KEYS = (
    "presentations",
    "initial_learning_rate",
    "initial_radius",
    "seed",
    "sampling",
    "presentations_completed",
)


def _dump(value) -> str:
    return json.dumps(value, separators=(",", ":"), allow_nan=False)


def _floats(arr) -> list:
    return [float(v) for v in np.asarray(arr).reshape(-1)]


def model_to_json(model: SomModel) -> str:
    """Serialize ``model`` to its canonical text form."""
    if not np.all(np.isfinite(model.weights)):
        raise SchemaError("weights", "non-finite weight component")
    norm = model.normalization
    meta = None
    if model.training_meta is not None:
        cfg = model.training_meta.config
        meta = {
            "presentations": cfg.presentations,
            "initial_learning_rate": cfg.initial_learning_rate,
            "initial_radius": cfg.initial_radius,
            "seed": cfg.seed,
            "sampling": cfg.sampling,
            "presentations_completed": model.training_meta.presentations_completed,
        }
    head = [
        f'"format_version": {_dump(model.format_version)}',
        f'"side": {_dump(model.side)}',
        f'"dim": {_dump(model.dim)}',
        '"normalization": ' + _dump({
            "mins": _floats(norm.mins),
            "maxs": _floats(norm.maxs),
            "degenerate_flags": [bool(v) for v in norm.degenerate],
        }),
        f'"training_meta": {_dump(meta)}',
    ]
    rows = ",\n".join(_dump(_floats(w)) for w in model.weights)
    return "{\n" + ",\n".join(head) + ',\n"weights": [\n' + rows + "\n]\n}\n"


def save_model(model: SomModel, path) -> None:
    """Write ``model`` to ``path`` atomically (temp file + rename)."""
    text = model_to_json(model)
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=".somkit-", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _reject_constant(name):
    raise SchemaError("number", f"non-finite number {name} is not allowed")


def _int(doc, key, field=None):
    v = doc.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(field or key, f"expected an integer, got {v!r}")
    return v


def _number_list(value, field, length):
    if not isinstance(value, list) or len(value) != length:
        got = len(value) if isinstance(value, list) else type(value).__name__
        raise SchemaError(field, f"expected an array of {length} numbers, got {got}")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(field, f"expected a number, got {v!r}")
        if not math.isfinite(v):
            raise SchemaError(field, "non-finite number")
        out.append(float(v))
    return out


def model_from_dict(doc) -> SomModel:
    if not isinstance(doc, dict):
        raise SchemaError("document", "top level must be a JSON object")
    version = _int(doc, "format_version")
    if version != FORMAT_VERSION:
        raise SchemaError("format_version", f"unsupported version {version} (expected {FORMAT_VERSION})")
    side = _int(doc, "side")
    dim = _int(doc, "dim")
    if side < 1 or dim < 1:
        raise SchemaError("side" if side < 1 else "dim", "must be >= 1")

    weights = doc.get("weights")
    if not isinstance(weights, list) or len(weights) != side * side:
        got = len(weights) if isinstance(weights, list) else type(weights).__name__
        raise SchemaError("weights", f"expected {side * side} weight vectors, got {got}")
    W = np.array([_number_list(w, "weights", dim) for w in weights], dtype=np.float64)

    norm = doc.get("normalization")
    if not isinstance(norm, dict):
        raise SchemaError("normalization", "expected an object")
    mins = _number_list(norm.get("mins"), "normalization.mins", dim)
    maxs = _number_list(norm.get("maxs"), "normalization.maxs", dim)
    flags = norm.get("degenerate_flags")
    if not isinstance(flags, list) or len(flags) != dim or not all(isinstance(f, bool) for f in flags):
        raise SchemaError("normalization.degenerate_flags", f"expected {dim} booleans")
    try:
        params = NormalizationParams(np.array(mins), np.array(maxs))
    except SomError as exc:
        raise SchemaError("normalization", str(exc)) from None
    if flags != [bool(v) for v in params.degenerate]:
        raise SchemaError("normalization.degenerate_flags", "inconsistent with mins/maxs")

    meta_doc = doc.get("training_meta")
    meta = None
    if meta_doc is not None:
        if not isinstance(meta_doc, dict) or set(meta_doc) != set(_META_KEYS):
            raise SchemaError("training_meta", f"expected null or an object with keys {list(_META_KEYS)}")
        try:
            cfg = TrainingConfig(
                side=side,
                presentations=_int(meta_doc, "presentations", "training_meta.presentations"),
                initial_learning_rate=_number_list(
                    [meta_doc["initial_learning_rate"]], "training_meta.initial_learning_rate", 1)[0],
                initial_radius=_number_list(
                    [meta_doc["initial_radius"]], "training_meta.initial_radius", 1)[0],
                seed=_int(meta_doc, "seed", "training_meta.seed"),
                sampling=meta_doc["sampling"],
            )
        except ConfigError as exc:
            raise SchemaError("training_meta", str(exc)) from None
        done = _int(meta_doc, "presentations_completed", "training_meta.presentations_completed")
        if not 0 <= done <= cfg.presentations:
            raise SchemaError("training_meta.presentations_completed",
                              f"{done} outside [0, {cfg.presentations}]")
        meta = TrainingMeta(cfg, done)

    wm = WeightMatrix(side, dim, W).freeze()
    return SomModel(wm, params, meta, format_version=version)


def model_from_json(text: str) -> SomModel:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise DataFormatError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno} (char {exc.pos}): {exc.msg}"
        ) from None
    return model_from_dict(doc)


def load_model(path) -> SomModel:
    """Read and fully validate a model file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"cannot read model {path}: {exc}") from exc
    return model_from_json(text)
