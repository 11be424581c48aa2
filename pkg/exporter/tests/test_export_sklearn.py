import json

import numpy as np
import pytest
from sklearn.ensemble import (
    GradientBoostingClassifier,
    GradientBoostingRegressor,
    RandomForestClassifier,
    RandomForestRegressor,
)
from sklearn.linear_model import LinearRegression, LogisticRegression
from sklearn.neural_network import MLPClassifier, MLPRegressor
from sklearn.tree import DecisionTreeClassifier, DecisionTreeRegressor

from surromip.predictors import evaluate, load_predictor
from surromip_exporter import (
    ExportJob,
    UnsupportedModelError,
    VerificationError,
    export_model,
    verify_export,
)


def training_data(seed=0, n=400, d=4, classes=None):
    r = np.random.default_rng(seed)
    X = r.uniform(-1, 1, (n, d))
    if classes:
        y = (np.abs(X[:, 0] * 3 + X[:, 1]) * classes / 4).astype(int) % classes
    else:
        y = X @ r.uniform(-1, 1, d) + 0.3 * np.maximum(X[:, 0], 0) + r.normal(0, 0.05, n)
    return X, y


def exported(model, tmp_path, name="m.json"):
    job = ExportJob("sk", model, str(tmp_path / name))
    export_model(job)
    return job


def test_linear_regression(tmp_path):
    X, y = training_data()
    model = LinearRegression().fit(X, y)
    job = exported(model, tmp_path)
    assert verify_export(job, n_samples=200) <= 1e-10
    p = load_predictor(job.out_path)
    assert p.input_dim == 4 and p.head == "regression"


def test_decision_tree_depth2_has_4_leaves(tmp_path):
    X, y = training_data()
    model = DecisionTreeRegressor(max_depth=2, random_state=0).fit(X, y)
    job = exported(model, tmp_path)
    doc = json.loads(open(job.out_path, encoding="utf-8").read())
    assert doc["kind"] == "tree"

    def count_leaves(node):
        if "leaf" in node:
            return 1
        return count_leaves(node["split"]["left"]) + count_leaves(node["split"]["right"])

    assert count_leaves(doc["tree"]) == 4
    assert verify_export(job, n_samples=500) == 0.0


def test_decision_tree_classifier(tmp_path):
    X, y = training_data(classes=3)
    model = DecisionTreeClassifier(max_depth=3, random_state=0).fit(X, y)
    job = exported(model, tmp_path)
    assert verify_export(job, n_samples=500) <= 1e-12
    p = load_predictor(job.out_path)
    assert p.head == "argmax_classification"
    # the exported class index matches the framework's label position
    x = X[0]
    assert model.classes_[int(evaluate(p, x)[0])] == model.predict([x])[0]


def test_random_forest_regressor(tmp_path):
    X, y = training_data()
    model = RandomForestRegressor(n_estimators=5, max_depth=3,
                                  random_state=0).fit(X, y)
    job = exported(model, tmp_path)
    assert verify_export(job, n_samples=1000) <= 1e-8
    doc = json.loads(open(job.out_path, encoding="utf-8").read())
    assert doc["kind"] == "forest" and doc["combine"] == "mean"


def test_random_forest_classifier(tmp_path):
    X, y = training_data(classes=3)
    model = RandomForestClassifier(n_estimators=5, max_depth=3,
                                   random_state=0).fit(X, y)
    job = exported(model, tmp_path)
    assert verify_export(job, n_samples=500) <= 1e-9


def test_gbdt_leaves_scaled_by_learning_rate(tmp_path):
    X, y = training_data()
    model = GradientBoostingRegressor(n_estimators=3, max_depth=2,
                                      learning_rate=0.1,
                                      random_state=0).fit(X, y)
    job = exported(model, tmp_path)
    assert verify_export(job, n_samples=1000) <= 1e-8
    doc = json.loads(open(job.out_path, encoding="utf-8").read())
    assert doc["kind"] == "gbdt" and doc["combine"] == "sum"
    # raw first-stage leaf times the learning rate equals the exported leaf
    raw_first = model.estimators_[0][0].tree_.value[:, 0, 0]
    raw_leaves = sorted(v for v, l in zip(
        raw_first, model.estimators_[0][0].tree_.children_left) if l == -1)

    def leaves_of(node, acc):
        if "leaf" in node:
            acc.append(node["leaf"][0])
        else:
            leaves_of(node["split"]["left"], acc)
            leaves_of(node["split"]["right"], acc)
        return acc

    got = sorted(leaves_of(doc["trees"][0], []))
    assert np.allclose(got, [0.1 * v for v in raw_leaves])


def test_mlp_regressor(tmp_path):
    X, y = training_data()
    model = MLPRegressor(hidden_layer_sizes=(8,), activation="relu",
                         max_iter=300, random_state=0).fit(X, y)
    job = exported(model, tmp_path)
    assert verify_export(job, n_samples=1000) <= 1e-6


def test_mlp_classifier(tmp_path):
    X, y = training_data(classes=3)
    model = MLPClassifier(hidden_layer_sizes=(8,), activation="relu",
                          max_iter=300, random_state=0).fit(X, y)
    job = exported(model, tmp_path)
    assert verify_export(job, n_samples=500) == 0.0
    assert load_predictor(job.out_path).head == "argmax_classification"


def test_unsupported_models(tmp_path):
    X, y = training_data()
    Xc, yc = training_data(classes=2)
    tanh = MLPRegressor(hidden_layer_sizes=(4,), activation="tanh",
                        max_iter=50, random_state=0).fit(X, y)
    with pytest.raises(UnsupportedModelError, match="relu"):
        export_model(ExportJob("sk", tanh, str(tmp_path / "t.json")))
    gbc = GradientBoostingClassifier(n_estimators=2, max_depth=2,
                                     random_state=0).fit(Xc, yc)
    with pytest.raises(UnsupportedModelError, match="regressor variant"):
        export_model(ExportJob("sk", gbc, str(tmp_path / "g.json")))
    logit = LogisticRegression().fit(Xc, yc)
    with pytest.raises(UnsupportedModelError, match="link function"):
        export_model(ExportJob("sk", logit, str(tmp_path / "l.json")))
    with pytest.raises(UnsupportedModelError, match="fit"):
        export_model(ExportJob("sk", LinearRegression(),
                               str(tmp_path / "u.json")))


def test_corrupted_file_fails_verification(tmp_path):
    X, y = training_data()
    model = LinearRegression().fit(X, y)
    job = exported(model, tmp_path)
    doc = json.loads(open(job.out_path, encoding="utf-8").read())
    doc["bias"] = [doc["bias"][0] + 0.5]
    with open(job.out_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc))
    with pytest.raises(VerificationError, match="sample"):
        verify_export(job, n_samples=50)
