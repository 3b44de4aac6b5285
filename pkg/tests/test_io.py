import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from convexnn.errors import InvalidArgument, ParseError, UnsupportedVersion
from convexnn.geometry import Ellipsoid, Zonotope
from convexnn.io import (
    dataset_to_csv,
    load_body,
    load_model,
    model_from_json,
    model_to_dict,
    model_to_json,
    parse_dataset,
    read_vector,
    save_model,
)
from convexnn.model import Dataset, SignedMeasureModel, predict_many

from conftest import ball_points


def _model(seed, k=7, d=3, alpha=1, p=2.0):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((k, d + 1))
    V /= np.linalg.norm(V, ord=p, axis=1, keepdims=True)
    return SignedMeasureModel(alpha, p, 1.5, rng.standard_normal(k), V)


@pytest.mark.parametrize("alpha,p", [(0, 2.0), (1, 2.0), (2, 1.0)])
def test_model_round_trip_is_bit_identical(tmp_path, alpha, p):
    m = _model(alpha, alpha=alpha, p=p)
    path = tmp_path / "m.json"
    save_model(m, path)
    back = load_model(path)
    assert np.array_equal(back.V, m.V) and np.array_equal(back.etas, m.etas)
    X = ball_points(np.random.default_rng(9), 1000, 3, 1.5)
    assert np.array_equal(predict_many(back, X), predict_many(m, X))


@given(st.lists(st.floats(-1e300, 1e300, allow_nan=False), min_size=1, max_size=5))
def test_weights_survive_text(etas):
    k = len(etas)
    V = np.tile([0.6, 0.8], (k, 1))
    m = SignedMeasureModel(1, 2.0, 1.0, np.array(etas), V)
    assert np.array_equal(model_from_json(model_to_json(m)).etas, m.etas)


def test_missing_field():
    obj = model_to_dict(_model(0))
    del obj["units"]
    with pytest.raises(ParseError, match="units"):
        model_from_json(json.dumps(obj))


def test_version_checks():
    obj = model_to_dict(_model(0))
    obj["version"] = 2
    with pytest.raises(UnsupportedVersion):
        model_from_json(json.dumps(obj))
    obj["version"] = 1
    obj["format"] = "onnx"
    with pytest.raises(UnsupportedVersion):
        model_from_json(json.dumps(obj))
    del obj["version"], obj["format"]
    assert model_from_json(json.dumps(obj)).k == 7


def test_malformed_json_reports_position():
    text = '{\n "alpha": 1,\n "p": 2.0,\n "R": oops\n}'
    with pytest.raises(ParseError, match=r"m\.json:4:7"):
        model_from_json(text, source="m.json")


def test_non_unit_direction_rejected():
    obj = model_to_dict(_model(0))
    obj["units"][0]["v"] = [1.0, 1.0, 1.0, 1.0]
    with pytest.raises(InvalidArgument):
        model_from_json(json.dumps(obj))


def test_dataset_csv_round_trip():
    rng = np.random.default_rng(1)
    ds = Dataset(ball_points(rng, 25, 3, 2.0), rng.standard_normal(25), 2.0, 2.0)
    back = parse_dataset(dataset_to_csv(ds), R=2.0)
    assert np.array_equal(back.xs, ds.xs) and np.array_equal(back.ys, ds.ys)


def test_dataset_errors_locate_the_cell():
    with pytest.raises(ParseError, match=r"d\.csv:3:5"):
        parse_dataset("# comment\nx1,x2,y\n0.1,zz,1\n", source="d.csv")
    with pytest.raises(ParseError, match="header"):
        parse_dataset("a,b\n1,2\n")
    with pytest.raises(ParseError, match="expected 3"):
        parse_dataset("x1,x2,y\n1,2\n")
    with pytest.raises(InvalidArgument):
        parse_dataset("x1,y\n5.0,1\n", R=1.0)


def test_read_vector_forms(tmp_path):
    a = tmp_path / "a.csv"
    a.write_text("g\n1.5\n-2\n\n3\n")
    b = tmp_path / "b.json"
    b.write_text("[1.5, -2, 3]")
    np.testing.assert_array_equal(read_vector(a), [1.5, -2, 3])
    np.testing.assert_array_equal(read_vector(b), [1.5, -2, 3])


def test_bodies():
    z = load_body({"generators": [[1, 0], [0, 2]]})
    e = load_body({"center": [0, 0], "shape": [[1, 0], [0, 1]]})
    assert isinstance(z, Zonotope) and isinstance(e, Ellipsoid)
    with pytest.raises(ParseError):
        load_body({"type": "simplex"})
