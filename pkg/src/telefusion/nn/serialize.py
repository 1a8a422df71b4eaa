"""Self-describing JSON model documents."""

from __future__ import annotations

import json

import numpy as np

from .model import InputSpec, Layer, ModelParams

SCHEMA_VERSION = 1


class ModelFormatError(ValueError):
    pass


def _arr(a: np.ndarray) -> dict:
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel(order="C")]}


def _unarr(d: dict) -> np.ndarray:
    return np.array(d["data"], dtype=float).reshape(d["shape"], order="C")


def to_document(model: ModelParams) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "input_spec": {
            "names": list(model.input_spec.names),
            "shape": list(model.input_spec.shape),
            "mean": _arr(model.input_spec.mean),
            "std": _arr(model.input_spec.std),
        },
        "layers": [
            {
                "kind": l.kind,
                "activation": l.activation,
                "pool": l.pool,
                "weights": _arr(l.weights),
                "biases": _arr(l.biases),
            }
            for l in model.layers
        ],
        "meta": model.meta,
    }


def serialize(model: ModelParams) -> str:
    """Canonical JSON text; equal models give byte-identical documents."""
    return json.dumps(to_document(model), sort_keys=True, separators=(",", ":"))


def from_document(doc: dict) -> ModelParams:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ModelFormatError(
            f"model schema_version {doc.get('schema_version')!r} != {SCHEMA_VERSION}"
        )
    try:
        spec = doc["input_spec"]
        layers = [
            Layer(l["kind"], _unarr(l["weights"]), _unarr(l["biases"]), l["activation"], l["pool"])
            for l in doc["layers"]
        ]
        inp = InputSpec(spec["names"], tuple(spec["shape"]), _unarr(spec["mean"]), _unarr(spec["std"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc
    return ModelParams(layers, inp, dict(doc.get("meta", {})))


def deserialize(text: str) -> ModelParams:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"cannot parse model document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    return from_document(doc)
