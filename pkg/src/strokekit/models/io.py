"""JSON model files.

Layout (field order fixed)::

    {version, task, schema_hash, kernel: {type, gamma}, C, epsilon,
     scaler: {means, stds, zero_variance},
     machines: [{classes | axis, sv, coef, bias}], target_transform}

Reals are written with 17 significant digits, enough for every double to
parse back to the same bits, so a reloaded model reproduces decision values
exactly.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..errors import IncompatibleModelError, ModelFormatError, SchemaError
from .kernels import KernelSpec
from .scaler import Scaler
from .svm import BinaryMachine, SvmModel, SvrModel

FORMAT_VERSION = 1


def _floats(a) -> list:
    return [float(v) for v in np.asarray(a, dtype=np.float64).reshape(-1)]


def model_to_dict(model: Union[SvmModel, SvrModel]) -> dict:
    if isinstance(model, SvmModel):
        machines = [
            {"classes": list(m.key), "sv": [_floats(r) for r in m.sv], "coef": _floats(m.coef), "bias": float(m.bias)}
            for m in model.machines
        ]
        epsilon, transform = None, None
    elif isinstance(model, SvrModel):
        m = model.machine
        machines = [{"axis": m.key, "sv": [_floats(r) for r in m.sv], "coef": _floats(m.coef), "bias": float(m.bias)}]
        epsilon = float(model.epsilon)
        transform = {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                     for k, v in model.target_transform.items()}
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return {
        "version": FORMAT_VERSION,
        "task": model.task,
        "schema_hash": model.schema_hash,
        "kernel": {"type": model.kernel.type, "gamma": float(model.kernel.gamma)},
        "C": float(model.C),
        "epsilon": epsilon,
        "scaler": {
            "means": _floats(model.scaler.means),
            "stds": _floats(model.scaler.stds),
            "zero_variance": [bool(v) for v in model.scaler.zero_variance],
        },
        "machines": machines,
        "target_transform": transform,
    }


def _array2d(rows, width: int) -> np.ndarray:
    a = np.asarray(rows, dtype=np.float64)
    return a.reshape(-1, width) if a.size else np.zeros((0, width))


def model_from_dict(doc: dict) -> Union[SvmModel, SvrModel]:
    if not isinstance(doc, dict) or "version" not in doc:
        raise ModelFormatError("not a model document (missing 'version')")
    if doc["version"] != FORMAT_VERSION:
        raise IncompatibleModelError(
            f"model format version {doc['version']} is not supported (expected {FORMAT_VERSION})"
        )
    try:
        kernel = KernelSpec(doc["kernel"]["type"], float(doc["kernel"]["gamma"]))
        sc = doc["scaler"]
        scaler = Scaler(sc["means"], sc["stds"], sc.get("zero_variance"))
        d = scaler.n_features
        machines = []
        for m in doc["machines"]:
            key = tuple(m["classes"]) if "classes" in m else m["axis"]
            coef = np.asarray(m["coef"], dtype=np.float64)
            sv = _array2d(m["sv"], d)
            if sv.shape[0] != coef.size:
                raise ModelFormatError(f"machine {key}: {sv.shape[0]} support vectors but {coef.size} coefficients")
            machines.append(BinaryMachine(key, sv, coef, float(m["bias"])))
        if doc["epsilon"] is None:
            classes = []
            for m in machines:
                for c in m.key:
                    if c not in classes:
                        classes.append(c)
            return SvmModel(classes, machines, kernel, float(doc["C"]), scaler, doc["schema_hash"], doc["task"])
        if len(machines) != 1:
            raise ModelFormatError(f"regression model must hold exactly one machine, found {len(machines)}")
        return SvrModel(machines[0], kernel, float(doc["C"]), float(doc["epsilon"]), scaler,
                        doc["schema_hash"], doc["task"], dict(doc["target_transform"] or {}))
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc!r}") from exc


def _encode(obj) -> str:
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not np.isfinite(obj):
            raise ValueError(f"cannot serialise non-finite value {obj}")
        return format(obj, ".17g")
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_model(model) -> str:
    return _encode(model_to_dict(model)) + "\n"


def save_model(model, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(dumps_model(model))
    os.replace(tmp, path)
    return path


def load_model(path, expected_schema: Optional[str] = None):
    """Read a model file.

    Raises :class:`ModelFormatError` for unparsable or incomplete files,
    :class:`IncompatibleModelError` for a different format version and
    :class:`SchemaError` when ``expected_schema`` differs from the stored hash.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{path}: cannot parse model file: {exc}") from exc
    model = model_from_dict(doc)
    if expected_schema is not None and model.schema_hash != expected_schema:
        raise SchemaError(expected_schema, model.schema_hash, what=f"{path}: feature schema")
    return model
