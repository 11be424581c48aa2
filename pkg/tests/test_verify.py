import json

import numpy as np
import pytest

from surromip.embed import EmbedOptions, embed_tree
from surromip.mip import CONTINUOUS, MipModel
from surromip.predictors import (
    AffineLayer,
    Leaf,
    LinearModel,
    NeuralNet,
    Predictor,
    Split,
)
from surromip.solver import bb_solve
from surromip.surrogatelib import InstanceRecipe, generate_instance
from surromip.verify import (
    check_exactness,
    oracle_enumerate_nn,
    oracle_enumerate_tree,
    report_json,
    report_text,
    tolerance_demo,
)


def function_recipe(kind, dp):
    return InstanceRecipe(family="function", predictor_kind=kind,
                          problem_params=(2,), predictor_params=dp,
                          data_seed=0, train_seed=0)


def test_exactness_linear():
    p = Predictor(LinearModel([[1.0, -0.5]], [0.25]), "regression", 2)
    rep = check_exactness(p, n_samples=20, seed=1)
    assert rep.passed and rep.samples == 20 and rep.boundary_skipped == 0


def test_exactness_stump_and_boundary_skip():
    p = Predictor(Split(0, 0.0, Leaf([1.0]), Leaf([2.0])), "regression", 1)
    rep = check_exactness(p, n_samples=30, seed=2)
    assert rep.passed
    # a box collapsed onto the threshold only produces boundary samples
    tight = EmbedOptions(input_box=[(-1e-9, 1e-9)])
    rep = check_exactness(p, tight, n_samples=5, seed=0)
    assert rep.samples == 0 and rep.boundary_skipped == 5


@pytest.mark.parametrize("formulation", ["bigm", "sos1"])
def test_exactness_small_net(formulation):
    r = np.random.default_rng(3)
    p = Predictor(NeuralNet((
        AffineLayer(r.uniform(-1, 1, (3, 2)), r.uniform(-0.3, 0.3, 3), "relu"),
        AffineLayer(r.uniform(-1, 1, (1, 3)), [0.0], "identity"),
    )), "regression", 2)
    rep = check_exactness(p, EmbedOptions(relu_formulation=formulation),
                          n_samples=15, seed=4)
    assert rep.passed, report_text(rep)


def test_exactness_argmax_head():
    p = Predictor(LinearModel([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.1]),
                  "argmax_classification", 2)
    rep = check_exactness(p, n_samples=15, seed=5)
    assert rep.passed, report_text(rep)


def leaf_selection_feasible(epsilon, which):
    """Fix one leaf binary of a stump with the input pinned at the threshold."""
    model = MipModel()
    x = model.add_var(CONTINUOUS, 0.5, 0.5, "x")
    out = model.add_var(CONTINUOUS, 1.0, 2.0, "out")
    res = embed_tree(model, Split(0, 0.5, Leaf([1.0]), Leaf([2.0])), [x], [out],
                     epsilon=epsilon)
    deltas = res.aux_vars["trees"][0]["deltas"]
    for j, d in enumerate(deltas):
        model.vars[d].lb = model.vars[d].ub = 1.0 if j == which else 0.0
    model.set_objective("min", ((1.0, out),))
    return bb_solve(model).status == "optimal"


def test_epsilon_boundary_semantics():
    # exactly on the threshold: with no margin either leaf can be selected,
    # with a 0.2 margin neither can
    assert leaf_selection_feasible(0.0, 0) is True
    assert leaf_selection_feasible(0.0, 1) is True
    assert leaf_selection_feasible(0.2, 0) is False
    assert leaf_selection_feasible(0.2, 1) is False


def test_nn_oracle_matches_solver():
    model, manifest = generate_instance(function_recipe("mlp-bigm", (1, 4)))
    got = oracle_enumerate_nn(model, manifest["embeddings"])
    assert got.status == "optimal"
    assert got.objective == pytest.approx(-2.27575808, abs=1e-6)
    assert got.lp_count == 256
    res = bb_solve(model)
    assert res.objective == pytest.approx(got.objective, abs=1e-6)


def test_nn_oracle_covers_sos1_formulation():
    model, manifest = generate_instance(function_recipe("mlp-sos", (1, 4)))
    got = oracle_enumerate_nn(model, manifest["embeddings"])
    assert got.status == "optimal"
    assert got.objective == pytest.approx(-2.27575808, abs=1e-6)
    res = bb_solve(model)
    assert res.objective == pytest.approx(got.objective, abs=1e-6)


def test_tree_oracle_matches_solver():
    model, manifest = generate_instance(function_recipe("dt", (2,)))
    got = oracle_enumerate_tree(model, manifest["embeddings"])
    assert got.status == "optimal"
    assert got.objective == pytest.approx(0.43624991, abs=1e-6)
    assert got.lp_count == 16
    res = bb_solve(model)
    assert res.objective == pytest.approx(got.objective, abs=1e-6)


def test_tree_oracle_gbdt():
    model, manifest = generate_instance(function_recipe("gbdt", (2, 2)))
    got = oracle_enumerate_tree(model, manifest["embeddings"])
    assert got.objective == pytest.approx(-2.11394717, abs=1e-6)
    assert got.lp_count == 256
    res = bb_solve(model)
    assert res.objective == pytest.approx(got.objective, abs=1e-6)


def test_oracle_size_guards():
    model, manifest = generate_instance(function_recipe("mlp-bigm", (2, 8)))
    with pytest.raises(ValueError, match="neurons"):
        oracle_enumerate_nn(model, manifest["embeddings"], max_neurons=12)
    model, manifest = generate_instance(function_recipe("gbdt", (5, 4)))
    with pytest.raises(ValueError, match="combinations"):
        oracle_enumerate_tree(model, manifest["embeddings"], max_combos=4096)


def test_tolerance_demo_values():
    rep = tolerance_demo()
    assert rep["bigm_max_output"] == pytest.approx(1000.0, abs=1e-6)
    assert rep["sos1_max_output"] == pytest.approx(1e-6)
    assert rep["amplification_ratio"] >= 1e8


def test_report_rendering():
    p = Predictor(LinearModel([[1.0]], [0.0]), "regression", 1)
    rep = check_exactness(p, n_samples=3, seed=0)
    text = report_text(rep)
    assert "PASS" in text
    doc = json.loads(report_json(rep))
    assert doc["passed"] is True and doc["samples"] == 3
