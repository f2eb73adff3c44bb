import json
import math

import numpy as np
import pytest

import optree


@pytest.fixture(scope="module")
def model():
    data = optree.simulate("triangular", n=5000, seed=3)
    return optree.fit(data)


def test_simulate_is_seeded_and_in_range():
    a = optree.simulate("sine", n=1000, seed=1)
    b = optree.simulate("sine", n=1000, seed=1)
    assert a.shape == (1000,)
    assert np.array_equal(a, b)
    assert a.min() >= 0.0 and a.max() < 1.0
    assert not np.array_equal(a, optree.simulate("sine", n=1000, seed=2))


def test_fit_and_median_tree(model):
    assert model.n == 5000
    assert model.flat_level == math.ceil(math.sqrt(math.log(5000)))
    assert model.split_probability(0, 0) == 1.0
    assert model.odds_identity_residual() < 1e-9
    tree = model.median_tree()
    assert tree[0] == (0, 0)
    assert tree == sorted(tree)
    f = model.estimate()
    assert abs(f.total_mass - 1.0) < 1e-12
    assert np.all(f.evaluate(np.linspace(0, 0.999, 50)) >= 0.0)


def test_model_json_round_trip(model):
    back = optree.Model.from_json(model.to_json())
    assert back.median_tree() == model.median_tree()
    bad = json.loads(model.to_json())
    bad["posterior_split"][1][0] = 0.123
    with pytest.raises(ValueError):
        optree.Model.from_json(json.dumps(bad))


def test_bands(model):
    simple = optree.band(model, "simple")
    assert simple["radius"] > 0.0
    ms = optree.band(model, "multiscale", level=0.1, draws=500)
    assert ms["scaled_radius"] > 0.0
    assert ms["center"] == simple["center"]
    cdf = optree.cdf_band(model, level=0.05, draws=500)
    assert cdf["t"][0] == 0.0 and cdf["t"][-1] == 1.0
    assert 0.0 < cdf["radius"] < 0.2
    with pytest.raises(ValueError):
        optree.band(model, "wavelet")


def test_posterior_draws_are_densities(model):
    draws = model.sample_densities(50, seed=9)
    assert len(draws) == 50
    assert all(abs(d.total_mass - 1.0) < 1e-12 for d in draws)


def test_truth_and_errors():
    t = optree.truth_density("triangular")
    assert len(t) == 4096
    assert abs(t(0.25) - 1.0) < 1e-3
    with pytest.raises(ValueError):
        optree.truth_density("gaussian")
    with pytest.raises(ValueError):
        optree.fit([0.5, 1.2])


def test_pipeline_and_table1(tmp_path):
    manifest = optree.run_pipeline({"n": 2000, "draws": 200, "seed": 4}, str(tmp_path))
    assert manifest["config"]["n"] == 2000
    assert (tmp_path / "manifest.json").exists()
    report = optree.reproduce_table1(n=2000, draws=200, levels=[0.05])
    row = report["rows"][0]
    assert row["independence_product"] == row["credibility_linf"] * row["credibility_multiscale_ball"]
