"""Reading and writing datasets, models and convex bodies."""

from __future__ import annotations

import csv
import json

import numpy as np

from .errors import InvalidArgument, ParseError, UnsupportedVersion
from .model import Dataset, SignedMeasureModel

MODEL_FORMAT = "convexnn-model"
MODEL_VERSION = 1


# ------------------------------------------------------------------ datasets

def dataset_to_csv(ds: Dataset) -> str:
    cols = [f"x{i + 1}" for i in range(ds.d)] + ["y"]
    lines = [",".join(cols)]
    for x, y in zip(ds.xs, ds.ys):
        lines.append(",".join(repr(float(v)) for v in x) + "," + repr(float(y)))
    return "\n".join(lines) + "\n"


def write_dataset(ds: Dataset, path):
    with open(path, "w") as fh:
        fh.write(dataset_to_csv(ds))


def parse_dataset(text: str, R=1.0, q=2.0, source="<string>") -> Dataset:
    """Parse a CSV with header x1..xd,y.  Lines starting with '#' are skipped."""
    rows = []
    header = None
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or row[0].lstrip().startswith("#"):
            continue
        if header is None:
            header = [c.strip() for c in row]
            d = len(header) - 1
            if d < 1 or header != [f"x{i + 1}" for i in range(d)] + ["y"]:
                raise ParseError(f"{source}:{lineno}:1: header must read x1,...,xd,y")
            continue
        if len(row) != len(header):
            raise ParseError(f"{source}:{lineno}:1: expected {len(header)} fields, got {len(row)}")
        vals = []
        col = 1
        for cell in row:
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError(f"{source}:{lineno}:{col}: not a number: {cell!r}") from None
            col += len(cell) + 1
        rows.append(vals)
    if header is None:
        raise ParseError(f"{source}:1:1: empty dataset file")
    A = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return Dataset(A[:, :-1], A[:, -1], R, q)


def read_dataset(path, R=1.0, q=2.0) -> Dataset:
    with open(path) as fh:
        return parse_dataset(fh.read(), R, q, source=str(path))


def read_vector(path) -> np.ndarray:
    """One number per line (a header line is allowed), or a JSON list."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("["):
        return np.asarray(loads(text, str(path)), dtype=float)
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split(",")[0].strip()
        if not s or s.startswith("#"):
            continue
        try:
            out.append(float(s))
        except ValueError:
            if out:
                raise ParseError(f"{path}:{lineno}:1: not a number: {s!r}") from None
    return np.array(out)


# ------------------------------------------------------------------ JSON helpers

def loads(text: str, source="<string>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def load_json(path):
    with open(path) as fh:
        return loads(fh.read(), str(path))


def _require(obj, key, source):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"{source}: missing field {key!r}")
    return obj[key]


# ------------------------------------------------------------------ models

def model_to_dict(model: SignedMeasureModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "alpha": int(model.alpha),
        "p": float(model.p),
        "R": float(model.R),
        "units": [{"eta": float(e), "v": [float(c) for c in v]}
                  for e, v in zip(model.etas, model.V)],
    }


def model_to_json(model: SignedMeasureModel) -> str:
    # json writes floats with repr, which round-trips every bit
    return json.dumps(model_to_dict(model), indent=1) + "\n"


def model_from_dict(obj, source="<model>") -> SignedMeasureModel:
    if not isinstance(obj, dict):
        raise ParseError(f"{source}: a model is a JSON object")
    version = obj.get("version", MODEL_VERSION)
    if version != MODEL_VERSION:
        raise UnsupportedVersion(f"{source}: model version {version!r}, this build reads "
                                 f"{MODEL_VERSION}")
    if obj.get("format", MODEL_FORMAT) != MODEL_FORMAT:
        raise UnsupportedVersion(f"{source}: unknown format {obj['format']!r}")
    alpha = _require(obj, "alpha", source)
    p = _require(obj, "p", source)
    R = _require(obj, "R", source)
    units = _require(obj, "units", source)
    try:
        etas = [float(_require(u, "eta", source)) for u in units]
        V = [[float(c) for c in _require(u, "v", source)] for u in units]
        if units and len({len(v) for v in V}) != 1:
            raise ParseError(f"{source}: unit directions differ in length")
        V = np.array(V, dtype=float) if units else np.zeros((0, 0))
        return SignedMeasureModel(int(alpha), float(p), float(R), np.array(etas), V)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidArgument):
            raise
        raise ParseError(f"{source}: {exc}") from None


def model_from_json(text: str, source="<string>") -> SignedMeasureModel:
    return model_from_dict(loads(text, source), source)


def save_model(model, path):
    with open(path, "w") as fh:
        fh.write(model_to_json(model))


def load_model(path) -> SignedMeasureModel:
    with open(path) as fh:
        return model_from_json(fh.read(), str(path))


# ------------------------------------------------------------------ bodies

def load_body(path_or_obj):
    """A zonotope {"generators": [[...], ...]} or an ellipsoid {"center", "shape"}."""
    from .geometry import Ellipsoid, Zonotope

    if isinstance(path_or_obj, dict):
        obj, source = path_or_obj, "<body>"
    else:
        obj, source = load_json(path_or_obj), str(path_or_obj)
    if not isinstance(obj, dict):
        raise ParseError(f"{source}: a body is a JSON object")
    kind = obj.get("type") or ("zonotope" if "generators" in obj else "ellipsoid")
    if kind == "zonotope":
        gens = np.asarray(_require(obj, "generators", source), dtype=float)
        return Zonotope(gens, dim=obj.get("dim"))
    if kind == "ellipsoid":
        return Ellipsoid(np.asarray(_require(obj, "center", source), dtype=float),
                         np.asarray(_require(obj, "shape", source), dtype=float))
    raise ParseError(f"{source}: unknown body type {kind!r}")
