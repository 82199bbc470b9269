"""Versioned JSON serialization for trained models.

Floats are written with Python's shortest round-trip repr, so save/load is
bitwise exact. The file layout is a single JSON document:

    {"format": "tabuq-model", "version": 1, "kind": "<kind>", "data": {...}}

where kind is one of mlp, logistic, vae, ensemble. Ensembles nest their
members as full documents of the same layout.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .ensemble import Ensemble
from .errors import DataError
from .logistic import LogisticModel
from .mlp import MlpModel
from .vae import PARAM_FIELDS, VaeModel

FORMAT_NAME = "tabuq-model"
FORMAT_VERSION = 1


def _to_document(model) -> dict:
    if isinstance(model, MlpModel):
        kind, data = "mlp", {
            "weights": [w.tolist() for w in model.weights],
            "biases": [b.tolist() for b in model.biases],
            "dropout_rate": model.dropout_rate,
        }
    elif isinstance(model, LogisticModel):
        kind, data = "logistic", {
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "C": model.C,
        }
    elif isinstance(model, VaeModel):
        kind, data = "vae", {name: getattr(model, name).tolist()
                             for name in PARAM_FIELDS}
    elif isinstance(model, Ensemble):
        kind, data = "ensemble", {
            "members": [_to_document(m) for m in model.members],
        }
    else:
        raise DataError(f"cannot serialize object of type {type(model).__name__}")
    return {"format": FORMAT_NAME, "version": FORMAT_VERSION,
            "kind": kind, "data": data}


def _arr(value) -> np.ndarray:
    return np.asarray(value, dtype=np.float64)


def _from_document(doc: dict):
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise DataError("not a tabuq model document")
    if doc.get("version") != FORMAT_VERSION:
        raise DataError(f"unsupported model format version {doc.get('version')!r}")
    kind, data = doc.get("kind"), doc.get("data", {})
    if kind == "mlp":
        return MlpModel(weights=tuple(_arr(w) for w in data["weights"]),
                        biases=tuple(_arr(b) for b in data["biases"]),
                        dropout_rate=float(data["dropout_rate"]))
    if kind == "logistic":
        return LogisticModel(weights=_arr(data["weights"]),
                             bias=float(data["bias"]), C=float(data["C"]))
    if kind == "vae":
        return VaeModel(**{name: _arr(data[name]) for name in PARAM_FIELDS})
    if kind == "ensemble":
        return Ensemble(members=tuple(_from_document(m) for m in data["members"]))
    raise DataError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    """Write a model (or ensemble) to a JSON file; round-trip is bitwise exact."""
    Path(path).write_text(json.dumps(_to_document(model)), encoding="utf-8")


def load_model(path):
    """Load a model written by save_model."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: not valid JSON: {e}") from e
    return _from_document(doc)
