import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surromip.predictors import (
    AffineLayer,
    Ensemble,
    Leaf,
    LinearModel,
    NeuralNet,
    Predictor,
    PredictorParseError,
    PredictorValidationError,
    Split,
    UnsupportedActivationError,
    dims,
    dump_predictor,
    evaluate,
    leaves,
    loads_predictor,
    score_eval,
    traverse_leaf_index,
)


def stump(feature=0, threshold=0.5, left=1.0, right=2.0):
    return Split(feature, threshold, Leaf([left]), Leaf([right]))


def test_linear_eval():
    p = Predictor(LinearModel([[2.0, -1.0]], [0.5]), "regression", 2)
    assert evaluate(p, [3.0, 1.0])[0] == pytest.approx(5.5)
    assert dims(p) == (2, 1, 1)


def test_stump_eval_boundary_goes_left():
    p = Predictor(stump(), "regression", 1)
    assert evaluate(p, [0.4])[0] == 1.0
    assert evaluate(p, [0.6])[0] == 2.0
    # tie on the threshold resolves to the left child
    assert evaluate(p, [0.5])[0] == 1.0


def test_relu_net_eval():
    net = NeuralNet((
        AffineLayer([[1.0], [-1.0]], [0.0, 0.0], "relu"),
        AffineLayer([[1.0, 1.0]], [0.0], "identity"),
    ))
    p = Predictor(net, "regression", 1)
    # |x| network: relu(x) + relu(-x)
    assert evaluate(p, [3.0])[0] == pytest.approx(3.0)
    assert evaluate(p, [-2.0])[0] == pytest.approx(2.0)
    assert evaluate(p, [0.0])[0] == pytest.approx(0.0)


def test_gbdt_sum_with_offset():
    e = Ensemble((stump(), stump(left=10.0, right=20.0)), "sum", [100.0])
    p = Predictor(e, "regression", 1)
    assert evaluate(p, [0.0])[0] == pytest.approx(111.0)
    assert evaluate(p, [1.0])[0] == pytest.approx(122.0)


def test_forest_mean():
    e = Ensemble((stump(), stump(left=3.0, right=4.0)), "mean", [0.0])
    p = Predictor(e, "regression", 1)
    assert evaluate(p, [0.0])[0] == pytest.approx(2.0)


def test_argmax_head_smallest_winning_index():
    p = Predictor(LinearModel([[1.0], [1.0], [0.0]], [0.0, 0.0, 0.0]),
                  "argmax_classification", 1)
    # classes 0 and 1 tie; smallest index wins
    assert evaluate(p, [2.0])[0] == 0.0
    assert p.output_dim == 1 and p.score_dim == 3


def test_leaf_order_and_traversal():
    root = Split(0, 0.0, stump(1, 0.0, 1.0, 2.0), stump(1, 0.0, 3.0, 4.0))
    vals = [leaf.values[0] for leaf in leaves(root)]
    assert vals == [1.0, 2.0, 3.0, 4.0]
    assert traverse_leaf_index(root, [1.0, 1.0]) == 3
    assert traverse_leaf_index(root, [-1.0, -1.0]) == 0


def test_validation_rejects_bad_structures():
    with pytest.raises(UnsupportedActivationError):
        AffineLayer([[1.0]], [0.0], "tanh")
    with pytest.raises(PredictorValidationError):
        NeuralNet((AffineLayer([[1.0]], [0.0], "relu"),))  # relu output layer
    with pytest.raises(PredictorValidationError):
        Predictor(LinearModel([[1.0, 2.0]], [0.0]), "regression", 3)
    with pytest.raises(PredictorValidationError):
        # argmax needs at least two scores
        Predictor(LinearModel([[1.0]], [0.0]), "argmax_classification", 1)
    with pytest.raises(PredictorValidationError):
        Leaf([math.nan])
    with pytest.raises(PredictorValidationError):
        # inconsistent leaf dimensions within one tree
        Predictor(Split(0, 0.0, Leaf([1.0]), Leaf([1.0, 2.0])), "regression", 1)


def test_parse_errors():
    with pytest.raises(PredictorParseError):
        loads_predictor("not json")
    with pytest.raises(PredictorParseError):
        loads_predictor(json.dumps({"kind": "linear"}))
    with pytest.raises(PredictorValidationError):
        loads_predictor(json.dumps({"kind": "what", "head": "regression",
                                    "input_dim": 1}))


def test_roundtrip_all_kinds():
    kinds = [
        Predictor(LinearModel([[1.0, -2.0]], [3.0]), "regression", 2),
        Predictor(stump(), "regression", 1),
        Predictor(Ensemble((stump(), stump()), "sum", [1.0]), "regression", 1),
        Predictor(Ensemble((stump(), stump()), "mean", [0.0]), "regression", 1),
        Predictor(NeuralNet((
            AffineLayer([[1.0], [2.0]], [0.0, -1.0], "relu"),
            AffineLayer([[1.0, 1.0], [0.5, -0.5]], [0.0, 0.0], "identity"),
        )), "argmax_classification", 1),
    ]
    for p in kinds:
        q = loads_predictor(dump_predictor(p))
        assert dims(q) == dims(p)
        for x in ([0.3], [0.3, -1.2])[: 1 if p.input_dim == 1 else 2]:
            x = x * p.input_dim if len(x) != p.input_dim else x
            assert np.allclose(evaluate(q, x[: p.input_dim]),
                               evaluate(p, x[: p.input_dim]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3),
       st.integers(0, 2**31))
def test_net_eval_matches_manual_forward(x, seed):
    r = np.random.default_rng(seed)
    w1 = r.uniform(-1, 1, (4, 3))
    b1 = r.uniform(-1, 1, 4)
    w2 = r.uniform(-1, 1, (2, 4))
    b2 = r.uniform(-1, 1, 2)
    p = Predictor(NeuralNet((AffineLayer(w1, b1, "relu"),
                             AffineLayer(w2, b2, "identity"))), "regression", 3)
    want = w2 @ np.maximum(w1 @ np.array(x) + b1, 0.0) + b2
    assert np.allclose(score_eval(p, x), want, atol=1e-12)
