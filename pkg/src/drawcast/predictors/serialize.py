"""Self-describing text format for trained models.

A model file is line-oriented UTF-8:

    drawcast-model 1
    kind: <anfis | mlffnn | gmdh>
    <scalar fields as "name: value">
    array <name> <rows> <cols>
    <one row of repr() floats per line>
    ...

Floats are written with ``repr``, which round-trips exactly, so saving and
loading is lossless and byte-stable for a given model.
"""

from __future__ import annotations

import os

import numpy as np

from drawcast.predictors.anfis import FuzzyRuleBase
from drawcast.predictors.gmdh import GmdhNetwork, GmdhNeuron
from drawcast.predictors.mlffnn import MlffnnModel

MAGIC = "drawcast-model 1"


class ModelFormatError(ValueError):
    """Unreadable or inconsistent model file."""


def save_model(model: object, path: str | os.PathLike) -> None:
    """Write any supported model to ``path``."""
    if isinstance(model, FuzzyRuleBase):
        text = _dump_anfis(model)
    elif isinstance(model, MlffnnModel):
        text = _dump_mlffnn(model)
    elif isinstance(model, GmdhNetwork):
        text = _dump_gmdh(model)
    else:
        raise ModelFormatError(f"cannot serialise {type(model).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_model(path: str | os.PathLike) -> FuzzyRuleBase | MlffnnModel | GmdhNetwork:
    """Read a model file back into the matching object."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != MAGIC:
        raise ModelFormatError(f"{path}: missing header {MAGIC!r}")
    if len(lines) < 2 or not lines[1].startswith("kind: "):
        raise ModelFormatError(f"{path}: kind line must follow the header")
    kind = lines[1].partition(": ")[2]
    if kind == "gmdh":
        return _load_gmdh_lines(lines)
    fields, arrays = _parse_body(lines[1:])
    if kind == "anfis":
        return _load_anfis(fields, arrays)
    if kind == "mlffnn":
        return _load_mlffnn(fields, arrays)
    raise ModelFormatError(f"unknown model kind {kind!r}")


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------


def _fmt_array(name: str, arr: np.ndarray) -> str:
    arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
    rows = [" ".join(repr(float(v)) for v in row) for row in arr]
    return f"array {name} {arr.shape[0]} {arr.shape[1]}\n" + "\n".join(rows) + "\n"


def _parse_body(lines: list[str]) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    fields: dict[str, str] = {}
    arrays: dict[str, np.ndarray] = {}
    i = 0
    while i < len(lines):
        line = lines[i]
        i += 1
        if not line.strip():
            continue
        if line.startswith("array "):
            try:
                _, name, r, c = line.split()
                r, c = int(r), int(c)
            except ValueError:
                raise ModelFormatError(f"bad array header {line!r}") from None
            if i + r > len(lines):
                raise ModelFormatError(f"array {name!r} truncated")
            try:
                data = [[float(v) for v in lines[i + k].split()] for k in range(r)]
            except ValueError:
                raise ModelFormatError(f"array {name!r} holds non-numeric data") from None
            i += r
            arr = np.array(data, dtype=np.float64)
            if arr.shape != (r, c):
                raise ModelFormatError(f"array {name!r} shape mismatch")
            arrays[name] = arr
        elif ": " in line:
            key, _, value = line.partition(": ")
            fields[key] = value
        else:
            raise ModelFormatError(f"unparseable line {line!r}")
    return fields, arrays


def _need(arrays: dict[str, np.ndarray], *names: str) -> list[np.ndarray]:
    missing = [n for n in names if n not in arrays]
    if missing:
        raise ModelFormatError(f"missing arrays: {', '.join(missing)}")
    return [arrays[n] for n in names]


# ---------------------------------------------------------------------------
# per-kind dump/load
# ---------------------------------------------------------------------------


def _dump_anfis(fis: FuzzyRuleBase) -> str:
    parts = [
        MAGIC + "\n",
        "kind: anfis\n",
        f"rules: {fis.n_rules}\n",
        f"inputs: {fis.n_inputs}\n",
        _fmt_array("a", fis.a),
        _fmt_array("b", fis.b),
        _fmt_array("c", fis.c),
        _fmt_array("coeffs", fis.coeffs),
    ]
    return "".join(parts)


def _load_anfis(fields: dict[str, str], arrays: dict[str, np.ndarray]) -> FuzzyRuleBase:
    a, b, c, coeffs = _need(arrays, "a", "b", "c", "coeffs")
    fis = FuzzyRuleBase(a, b, c, coeffs)
    if fis.n_rules != int(fields.get("rules", fis.n_rules)) or fis.n_inputs != int(
        fields.get("inputs", fis.n_inputs)
    ):
        raise ModelFormatError("declared shape disagrees with arrays")
    return fis


def _dump_mlffnn(model: MlffnnModel) -> str:
    parts = [
        MAGIC + "\n",
        "kind: mlffnn\n",
        f"hidden: {model.hidden}\n",
        f"inputs: {model.n_inputs}\n",
        f"b2: {model.b2!r}\n",
        f"y_mean: {model.y_mean!r}\n",
        f"y_sd: {model.y_sd!r}\n",
        _fmt_array("w1", model.w1),
        _fmt_array("b1", model.b1),
        _fmt_array("w2", model.w2),
        _fmt_array("x_mean", model.x_mean),
        _fmt_array("x_sd", model.x_sd),
    ]
    return "".join(parts)


def _load_mlffnn(fields: dict[str, str], arrays: dict[str, np.ndarray]) -> MlffnnModel:
    w1, b1, w2, x_mean, x_sd = _need(arrays, "w1", "b1", "w2", "x_mean", "x_sd")
    try:
        return MlffnnModel(
            w1=w1,
            b1=b1.ravel(),
            w2=w2.ravel(),
            b2=float(fields["b2"]),
            x_mean=x_mean.ravel(),
            x_sd=x_sd.ravel(),
            y_mean=float(fields["y_mean"]),
            y_sd=float(fields["y_sd"]),
        )
    except KeyError as exc:
        raise ModelFormatError(f"missing field {exc}") from None


def _dump_gmdh(net: GmdhNetwork) -> str:
    parts = [
        MAGIC + "\n",
        "kind: gmdh\n",
        f"inputs: {net.n_inputs}\n",
        f"depth: {net.depth}\n",
        f"n_keep: {net.n_keep}\n",
        f"max_layers: {net.max_layers}\n",
        f"pressure: {net.pressure!r}\n",
        f"y_mean: {net.y_mean!r}\n",
        f"y_sd: {net.y_sd!r}\n",
    ]
    if net.input_names:
        parts.append("input_names: " + ",".join(net.input_names) + "\n")
    if net.criterion_history:
        parts.append(
            "criteria: " + ",".join(repr(v) for v in net.criterion_history) + "\n"
        )
    parts.append(_fmt_array("x_mean", net.x_mean))
    parts.append(_fmt_array("x_sd", net.x_sd))
    for li, layer in enumerate(net.layers):
        parts.append(f"layer: {li} {len(layer)}\n")
        for nrn in layer:
            coeffs = " ".join(repr(float(v)) for v in nrn.coeffs)
            parts.append(f"neuron {nrn.in1} {nrn.in2} {nrn.criterion!r} {coeffs}\n")
    return "".join(parts)


def _load_gmdh_lines(lines: list[str]) -> GmdhNetwork:
    """Parse the gmdh body (layer/neuron lines are position-sensitive)."""
    fields: dict[str, str] = {}
    arrays: dict[str, np.ndarray] = {}
    layers: list[list[GmdhNeuron]] = []
    i = 1
    while i < len(lines):
        line = lines[i]
        i += 1
        if not line.strip():
            continue
        if line.startswith("neuron "):
            if not layers:
                raise ModelFormatError("neuron before any layer line")
            bits = line.split()
            if len(bits) != 10:
                raise ModelFormatError(f"bad neuron line {line!r}")
            layers[-1].append(
                GmdhNeuron(
                    int(bits[1]),
                    int(bits[2]),
                    np.array([float(v) for v in bits[4:]]),
                    float(bits[3]),
                )
            )
        elif line.startswith("layer: "):
            layers.append([])
        elif line.startswith("array "):
            try:
                _, name, r, c = line.split()
                r, c = int(r), int(c)
            except ValueError:
                raise ModelFormatError(f"bad array header {line!r}") from None
            if i + r > len(lines):
                raise ModelFormatError(f"array {name!r} truncated")
            try:
                data = [[float(v) for v in lines[i + k].split()] for k in range(r)]
            except ValueError:
                raise ModelFormatError(f"array {name!r} holds non-numeric data") from None
            i += r
            arrays[name] = np.array(data, dtype=np.float64)
        elif ": " in line:
            key, _, value = line.partition(": ")
            fields[key] = value
        else:
            raise ModelFormatError(f"unparseable line {line!r}")
    history = (
        [float(v) for v in fields["criteria"].split(",")] if "criteria" in fields else []
    )
    names = fields.get("input_names")
    x_mean, x_sd = _need(arrays, "x_mean", "x_sd")
    try:
        net = GmdhNetwork(
            int(fields["inputs"]),
            layers,
            x_mean.ravel(),
            x_sd.ravel(),
            float(fields["y_mean"]),
            float(fields["y_sd"]),
            n_keep=int(fields.get("n_keep", 50)),
            max_layers=int(fields.get("max_layers", 7)),
            pressure=float(fields.get("pressure", 0.6)),
            criterion_history=history,
            input_names=names.split(",") if names else None,
        )
    except KeyError as exc:
        raise ModelFormatError(f"missing field {exc}") from None
    if net.depth != int(fields.get("depth", net.depth)):
        raise ModelFormatError("declared depth disagrees with layers")
    return net
