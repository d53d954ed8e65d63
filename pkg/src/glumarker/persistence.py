"""Binary model container shared by all model kinds.

Layout::

    b"GLUMARKR"                 8-byte magic
    uint32 LE                   format version
    uint32 LE                   header length in bytes
    header                      UTF-8 JSON: kind, meta, array names and shapes
    payload                     arrays back to back, little-endian float64, C order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .baselines import MLP, LinearSVC, NaiveBayes
from .errors import DataError
from .layers import DenseLayer
from .network import N_CLASSES, ModelParams

MAGIC = b"GLUMARKR"
FORMAT_VERSION = 1
DTYPE = "<f8"


def _layers_out(prefix: str, layers: List[DenseLayer], arrays: list, meta_layers: list) -> None:
    for i, layer in enumerate(layers):
        arrays.append((f"{prefix}.{i}.weights", layer.weights))
        arrays.append((f"{prefix}.{i}.biases", layer.biases))
        meta_layers.append({"name": f"{prefix}.{i}", "activation": layer.activation,
                            "in": layer.n_in, "out": layer.n_out})


def _encode(model) -> Tuple[str, dict, list]:
    arrays: list = []
    layers: list = []
    if isinstance(model, ModelParams):
        _layers_out("branch_c", model.branch_c, arrays, layers)
        _layers_out("branch_d", model.branch_d, arrays, layers)
        _layers_out("gate", [model.gate], arrays, layers)
        _layers_out("output", [model.output], arrays, layers)
        meta = {"n_continuous": model.n_continuous, "n_discrete": model.n_discrete,
                "branch_c": [l.n_out for l in model.branch_c],
                "branch_d": [l.n_out for l in model.branch_d], "d_r": model.d_r}
        return "glumarker", dict(meta, layers=layers), arrays
    if isinstance(model, MLP):
        _layers_out("layers", model.layers, arrays, layers)
        meta = {"n_continuous": model.n_continuous, "n_features": model.layers[0].n_in,
                "hidden": [l.n_out for l in model.layers[:-1]]}
        return "mlp", dict(meta, layers=layers), arrays
    if isinstance(model, NaiveBayes):
        arrays = [("priors", model.priors), ("means", model.means), ("variances", model.variances)]
        return "naive_bayes", {"n_continuous": model.n_continuous,
                               "n_features": int(model.means.shape[1])}, arrays
    if isinstance(model, LinearSVC):
        arrays = [("weights", model.weights), ("biases", model.biases)]
        return "linear_svc", {"n_continuous": model.n_continuous,
                              "n_features": int(model.weights.shape[1])}, arrays
    raise TypeError(f"cannot serialise {type(model).__name__}")


def dumps(model, extra_meta: Optional[dict] = None) -> bytes:
    kind, meta, arrays = _encode(model)
    if extra_meta:
        meta = dict(meta, extra=extra_meta)
    header = {
        "kind": kind,
        "dtype": DTYPE,
        "meta": meta,
        "arrays": [{"name": n, "shape": list(np.shape(a))} for n, a in arrays],
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    payload = b"".join(np.ascontiguousarray(a, dtype=DTYPE).tobytes() for _, a in arrays)
    return MAGIC + struct.pack("<II", FORMAT_VERSION, len(hbytes)) + hbytes + payload


def save_model(model, path, extra_meta: Optional[dict] = None) -> Path:
    path = Path(path)
    try:
        path.write_bytes(dumps(model, extra_meta))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _shape_check(arrays: Dict[str, np.ndarray], name: str, shape: Tuple[int, ...]) -> np.ndarray:
    if name not in arrays:
        raise DataError(f"model file lacks array {name!r}")
    if arrays[name].shape != tuple(shape):
        raise DataError(f"array {name!r} has shape {arrays[name].shape}, expected {tuple(shape)}")
    return arrays[name]


def _layers_in(prefix: str, meta_layers: list, arrays) -> List[DenseLayer]:
    out = []
    for m in meta_layers:
        if not m["name"].startswith(prefix + "."):
            continue
        W = _shape_check(arrays, m["name"] + ".weights", (m["out"], m["in"]))
        b = _shape_check(arrays, m["name"] + ".biases", (m["out"],))
        out.append(DenseLayer(W, b, m["activation"]))
    return out


def loads(blob: bytes, expect_kind: Optional[str] = None,
          expect_inputs: Optional[Tuple[int, int]] = None):
    """Rebuild a model; ``expect_inputs`` = (n_continuous, n_discrete) rejects
    files trained on a different feature layout."""
    if blob[:8] != MAGIC:
        raise DataError("not a GluMarker model file (bad magic)")
    if len(blob) < 16:
        raise DataError("truncated model file")
    version, hlen = struct.unpack("<II", blob[8:16])
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported model format version {version}")
    try:
        header = json.loads(blob[16:16 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"corrupt model header: {exc}") from exc
    if header.get("dtype") != DTYPE:
        raise DataError(f"unsupported dtype {header.get('dtype')!r}")
    kind = header["kind"]
    if expect_kind is not None and kind != expect_kind:
        raise DataError(f"expected a {expect_kind} model, file holds {kind}")
    arrays: Dict[str, np.ndarray] = {}
    offset = 16 + hlen
    for spec in header["arrays"]:
        shape = tuple(int(s) for s in spec["shape"])
        nbytes = 8 * int(np.prod(shape, dtype=np.int64))
        chunk = blob[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise DataError("truncated model payload")
        arrays[spec["name"]] = np.frombuffer(chunk, dtype=DTYPE).reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(blob):
        raise DataError("trailing bytes after model payload")

    meta = header["meta"]
    if kind == "glumarker":
        layers = meta["layers"]
        model = ModelParams(
            _layers_in("branch_c", layers, arrays),
            _layers_in("branch_d", layers, arrays),
            _layers_in("gate", layers, arrays)[0],
            _layers_in("output", layers, arrays)[0],
        )
        if (model.n_continuous, model.n_discrete) != (meta["n_continuous"], meta["n_discrete"]):
            raise DataError("model input widths disagree with header")
        n_c, n_total = model.n_continuous, model.n_continuous + model.n_discrete
    elif kind == "mlp":
        model = MLP(_layers_in("layers", meta["layers"], arrays), meta["n_continuous"])
        if model.layers[-1].n_out != N_CLASSES:
            raise DataError("MLP output width must be 3")
        n_c, n_total = model.n_continuous, model.layers[0].n_in
    elif kind == "naive_bayes":
        p = meta["n_features"]
        model = NaiveBayes(_shape_check(arrays, "priors", (N_CLASSES,)),
                           _shape_check(arrays, "means", (N_CLASSES, p)),
                           _shape_check(arrays, "variances", (N_CLASSES, p)), meta["n_continuous"])
        n_c, n_total = model.n_continuous, p
    elif kind == "linear_svc":
        p = meta["n_features"]
        model = LinearSVC(_shape_check(arrays, "weights", (N_CLASSES, p)),
                          _shape_check(arrays, "biases", (N_CLASSES,)), meta["n_continuous"])
        n_c, n_total = model.n_continuous, p
    else:
        raise DataError(f"unknown model kind {kind!r}")
    if expect_inputs is not None and (n_c, n_total - n_c) != tuple(expect_inputs):
        raise DataError(
            f"model expects inputs ({n_c}, {n_total - n_c}), data provides {tuple(expect_inputs)}"
        )
    return model


def load_model(path, expect_kind: Optional[str] = None,
               expect_inputs: Optional[Tuple[int, int]] = None):
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read model file {path}: {exc}") from exc
    try:
        return loads(blob, expect_kind, expect_inputs)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc
