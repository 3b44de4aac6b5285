import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from convexnn.errors import InvalidArgument
from convexnn.experiments import (
    CSV_HEADER,
    ExperimentConfig,
    _split,
    config_dict,
    run_adaptivity,
    run_replicate,
    synth_dataset,
)


def test_affine_without_noise_is_exactly_linear():
    cfg = ExperimentConfig(target="affine", d=3, n_grid=(50,), noise=0.0)
    ds, f = synth_dataset(cfg, 4, return_target=True)
    w, b = f.W[:, 0], f.offset[0]
    np.testing.assert_allclose(ds.ys, ds.xs @ w + b, atol=1e-14)
    assert np.linalg.norm(w) == pytest.approx(1.0)


@pytest.mark.parametrize("target", ["single-index", "multi-index"])
def test_nonnegative_noise_free_targets(target):
    cfg = ExperimentConfig(target=target, d=4, n_grid=(200,), noise=0.0)
    assert np.all(synth_dataset(cfg, 1).ys >= 0)


def test_projection_pursuit_is_piecewise_linear_mix():
    cfg = ExperimentConfig(target="projection-pursuit", d=3, k=3, noise=0.0)
    ds, f = synth_dataset(cfg, 2, return_target=True)
    want = np.maximum(ds.xs @ f.W - f.offset, 0.0) @ f.coef
    np.testing.assert_allclose(ds.ys, want, atol=1e-14)


def test_sampling_respects_the_input_ball():
    ds = synth_dataset(ExperimentConfig(d=5, n_grid=(300,), R=2.0), 0)
    assert np.max(np.linalg.norm(ds.xs, axis=1)) <= 2.0 + 1e-12
    box = synth_dataset(ExperimentConfig(d=5, n_grid=(300,), q=math.inf), 0)
    assert np.max(np.abs(box.xs)) <= 1.0


def test_sparse_directions():
    cfg = ExperimentConfig(target="single-index", d=50, sparsity=3, noise=0.0)
    _, f = synth_dataset(cfg, 9, return_target=True)
    assert np.count_nonzero(f.W[:, 0]) == 3


def test_synth_is_deterministic():
    cfg = ExperimentConfig(d=3, n_grid=(40,))
    a, b, c = (synth_dataset(cfg, s) for s in (7, 7, 8))
    assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys)
    assert not np.array_equal(a.xs, c.xs)


@given(st.integers(5, 400), st.floats(0.05, 0.9), st.integers(0, 2**32))
def test_validation_split_is_a_partition(n, frac, seed):
    tr, va = _split(n, frac, np.random.default_rng(seed))
    assert len(va) >= 1
    assert not set(tr) & set(va)
    assert sorted(np.concatenate([tr, va])) == list(range(n))


def test_config_validation():
    with pytest.raises(InvalidArgument):
        ExperimentConfig(target="xor")
    with pytest.raises(InvalidArgument):
        ExperimentConfig(families=("F3",))
    with pytest.raises(InvalidArgument):
        ExperimentConfig(d=4, sparsity=5)
    with pytest.raises(InvalidArgument):
        ExperimentConfig.from_dict({"colour": "red"})
    cfg = ExperimentConfig.from_dict({"q": "inf", "n_grid": [10, 20]})
    assert math.isinf(cfg.q) and cfg.n_grid == (10, 20)
    assert ExperimentConfig.from_dict(config_dict(cfg)) == cfg


def test_replicate_is_reproducible():
    cfg = ExperimentConfig(target="affine", d=2, families=("F1-FW", "F2-RF"), steps=10,
                           restarts=4, test_size=500)
    assert run_replicate(cfg, 40, 1) == run_replicate(cfg, 40, 1)
    assert run_replicate(cfg, 40, 1) != run_replicate(cfg, 40, 2)


def test_affine_risk_falls_with_n():
    # an affine target needs a variation norm a little above 2, hence delta = 4
    cfg = ExperimentConfig(target="affine", d=2, n_grid=(20, 320), replicates=3, delta=4.0,
                           families=("F1-FW",), steps=40, restarts=16, test_size=2000)
    res = run_adaptivity(cfg)
    means = {n: m for _, n, m, _, _ in res.rows}
    assert means[320] < means[20]


def test_csv_streams_to_file(tmp_path):
    cfg = ExperimentConfig(target="affine", d=2, n_grid=(12, 24), replicates=2,
                           families=("F2-RF",), steps=8, test_size=200)
    path = tmp_path / "out.csv"
    res = run_adaptivity(cfg, out=str(path))
    text = path.read_text()
    assert text == res.to_csv()
    assert text.startswith(CSV_HEADER) and len(text.splitlines()) == 3
    assert res.to_csv(timestamp=True).startswith("# generated ")
