"""Convert trained models from mainstream ML frameworks to interchange JSON.

Supported sources:
  sk     scikit-learn linear regression, decision tree, random forest,
         gradient boosting (regression), and ReLU MLPs.  Tree and forest
         classifiers export their per-class leaf proportions with an argmax
         head; MLP classifiers export raw scores with an argmax head
         (softmax preserves the argmax, so dropping it is lossless for the
         predicted class).  Gradient boosting classifiers are rejected:
         their per-class staged scores pass through a non-shared transform.
  torch  torch.nn.Sequential of Linear and ReLU modules.
  keras  keras Sequential of Dense layers with relu/linear activations.
  lgb    LightGBM (requires the lightgbm package).
  xgb    XGBoost (requires the xgboost package).

GBDT leaf values are pre-scaled by the learning rate and the base score is
folded into base_offset, so the exported file needs no framework-specific
interpretation.  Forests export with combine=mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from surromip.predictors import evaluate, load_predictor, score_eval

FRAMEWORKS = ("sk", "torch", "keras", "lgb", "xgb")


class ExportError(ValueError):
    pass


class UnsupportedModelError(ExportError):
    pass


class VerificationError(ExportError):
    pass


@dataclass
class ExportJob:
    framework: str
    model: object
    out_path: str

    def __post_init__(self):
        if self.framework not in FRAMEWORKS:
            raise ExportError(
                f"unknown framework {self.framework!r}; expected one of "
                f"{', '.join(FRAMEWORKS)}"
            )


# ---------------------------------------------------------------------------
# scikit-learn


def _sk_tree_doc(tree, classifier):
    """Interchange node for a fitted sklearn tree (tree_ attribute)."""
    left, right = tree.children_left, tree.children_right
    feature, threshold, value = tree.feature, tree.threshold, tree.value

    def node(i):
        if left[i] == -1:
            if classifier:
                v = np.asarray(value[i][0], dtype=float)
                total = v.sum()
                if total > 0:
                    v = v / total
            else:
                v = np.asarray(value[i, :, 0], dtype=float)
            return {"leaf": [float(x) for x in v]}
        return {
            "split": {
                "feature": int(feature[i]),
                "threshold": float(threshold[i]),
                "left": node(left[i]),
                "right": node(right[i]),
            }
        }

    return node(0)


def _convert_sklearn(model):
    name = type(model).__name__
    n_in = getattr(model, "n_features_in_", None)
    if n_in is None:
        raise UnsupportedModelError(
            f"{name} does not look like a fitted scikit-learn model "
            "(missing n_features_in_); fit it before exporting"
        )
    n_in = int(n_in)

    if hasattr(model, "coefs_"):  # MLP
        if model.activation != "relu":
            raise UnsupportedModelError(
                f"MLP activation {model.activation!r} is not supported; "
                "only relu hidden layers can be formulated"
            )
        classifier = hasattr(model, "classes_")
        if classifier and len(model.classes_) < 2:
            raise UnsupportedModelError("MLP classifier needs >= 2 classes")
        if classifier and len(model.classes_) == 2 and model.coefs_[-1].shape[1] == 1:
            raise UnsupportedModelError(
                "binary MLP classifier emits a single logit; the argmax head "
                "needs one score per class (train with >= 3 classes or "
                "export a regressor)"
            )
        layers = []
        n_layers = len(model.coefs_)
        for i, (w, b) in enumerate(zip(model.coefs_, model.intercepts_)):
            act = "identity" if i == n_layers - 1 else "relu"
            layers.append({
                "weights": np.asarray(w, dtype=float).T.tolist(),
                "bias": np.asarray(b, dtype=float).tolist(),
                "activation": act,
            })
        return {
            "kind": "neural_net",
            "head": "argmax" if classifier else "regression",
            "input_dim": n_in,
            "layers": layers,
        }

    if hasattr(model, "estimators_") and hasattr(model, "learning_rate"):  # GBDT
        if hasattr(model, "classes_"):
            raise UnsupportedModelError(
                "gradient boosting classifiers are not supported: staged "
                "class scores pass through a per-class transform that the "
                "argmax head cannot absorb; export the regressor variant"
            )
        lr = float(model.learning_rate)
        trees = []
        for stage in model.estimators_:
            doc = _sk_tree_doc(stage[0].tree_, classifier=False)
            trees.append(_scale_leaves(doc, lr))
        init = model.init_
        if hasattr(init, "predict"):
            base = float(np.asarray(
                init.predict(np.zeros((1, n_in)))).reshape(-1)[0])
        else:
            base = 0.0
        return {
            "kind": "gbdt",
            "head": "regression",
            "input_dim": n_in,
            "trees": trees,
            "combine": "sum",
            "base_offset": [base],
        }

    if hasattr(model, "estimators_"):  # random forest
        classifier = hasattr(model, "classes_")
        trees = [_sk_tree_doc(est.tree_, classifier)
                 for est in model.estimators_]
        out_dim = len(model.classes_) if classifier else 1
        return {
            "kind": "forest",
            "head": "argmax" if classifier else "regression",
            "input_dim": n_in,
            "trees": trees,
            "combine": "mean",
            "base_offset": [0.0] * out_dim,
        }

    if hasattr(model, "tree_"):  # single decision tree
        classifier = hasattr(model, "classes_")
        return {
            "kind": "tree",
            "head": "argmax" if classifier else "regression",
            "input_dim": n_in,
            "tree": _sk_tree_doc(model.tree_, classifier),
        }

    if hasattr(model, "coef_"):  # linear regression family
        if hasattr(model, "classes_"):
            raise UnsupportedModelError(
                f"{name} applies a link function to its linear scores; "
                "logistic-style classifiers are not supported"
            )
        w = np.atleast_2d(np.asarray(model.coef_, dtype=float))
        b = np.atleast_1d(np.asarray(model.intercept_, dtype=float))
        return {
            "kind": "linear",
            "head": "regression",
            "input_dim": n_in,
            "weights": w.tolist(),
            "bias": b.tolist(),
        }

    raise UnsupportedModelError(
        f"scikit-learn model {name} is not in the support matrix "
        "(linear regression, decision tree, random forest, gradient "
        "boosting regression, relu MLP)"
    )


def _scale_leaves(node_doc, factor):
    if "leaf" in node_doc:
        return {"leaf": [v * factor for v in node_doc["leaf"]]}
    s = node_doc["split"]
    return {"split": {
        "feature": s["feature"],
        "threshold": s["threshold"],
        "left": _scale_leaves(s["left"], factor),
        "right": _scale_leaves(s["right"], factor),
    }}


# ---------------------------------------------------------------------------
# torch


def _convert_torch(model):
    import torch.nn as nn

    if not isinstance(model, nn.Sequential):
        raise UnsupportedModelError(
            f"torch export expects nn.Sequential, got {type(model).__name__}; "
            "wrap the layers in a Sequential"
        )
    mods = [m for m in model]
    linears = []
    i = 0
    while i < len(mods):
        mod = mods[i]
        if not isinstance(mod, nn.Linear):
            raise UnsupportedModelError(
                f"unsupported module {type(mod).__name__} at position {i}; "
                "only Linear and ReLU are formulatable"
            )
        act = "identity"
        if i + 1 < len(mods):
            nxt = mods[i + 1]
            if isinstance(nxt, nn.ReLU):
                act = "relu"
                i += 1
            elif isinstance(nxt, nn.Linear):
                act = "identity"
            else:
                raise UnsupportedModelError(
                    f"unsupported module {type(nxt).__name__} at position "
                    f"{i + 1}; only Linear and ReLU are formulatable"
                )
        linears.append({
            "weights": mod.weight.detach().cpu().numpy().astype(float).tolist(),
            "bias": (mod.bias.detach().cpu().numpy().astype(float).tolist()
                     if mod.bias is not None
                     else [0.0] * mod.out_features),
            "activation": act,
        })
        i += 1
    if not linears:
        raise UnsupportedModelError("empty Sequential")
    if linears[-1]["activation"] != "identity":
        raise UnsupportedModelError(
            "the final layer must be Linear with no activation"
        )
    return {
        "kind": "neural_net",
        "head": "regression",
        "input_dim": len(linears[0]["weights"][0]),
        "layers": linears,
    }


# ---------------------------------------------------------------------------
# keras


def _convert_keras(model):
    layers = []
    for layer in model.layers:
        name = type(layer).__name__
        if name == "InputLayer":
            continue
        if name != "Dense":
            raise UnsupportedModelError(
                f"unsupported keras layer {name}; only Dense is formulatable"
            )
        act = getattr(layer.activation, "__name__", str(layer.activation))
        if act not in ("relu", "linear"):
            raise UnsupportedModelError(
                f"unsupported activation {act!r} on layer {layer.name}; "
                "only relu and linear are formulatable"
            )
        w, b = layer.get_weights()
        layers.append({
            "weights": np.asarray(w, dtype=float).T.tolist(),
            "bias": np.asarray(b, dtype=float).tolist(),
            "activation": "identity" if act == "linear" else "relu",
        })
    if not layers:
        raise UnsupportedModelError("keras model has no Dense layers")
    if layers[-1]["activation"] != "identity":
        raise UnsupportedModelError("the final Dense layer must be linear")
    return {
        "kind": "neural_net",
        "head": "regression",
        "input_dim": len(layers[0]["weights"][0]),
        "layers": layers,
    }


# ---------------------------------------------------------------------------
# optional boosters


def _convert_lgb(model):
    try:
        import lightgbm  # noqa: F401
    except ImportError:
        raise UnsupportedModelError(
            "lightgbm is not installed in this environment; "
            "pip install lightgbm, then re-run the export"
        ) from None
    raise UnsupportedModelError(
        "lightgbm support is not implemented in this build"
    )


def _convert_xgb(model):
    try:
        import xgboost  # noqa: F401
    except ImportError:
        raise UnsupportedModelError(
            "xgboost is not installed in this environment; "
            "pip install xgboost, then re-run the export"
        ) from None
    raise UnsupportedModelError(
        "xgboost support is not implemented in this build"
    )


_CONVERTERS = {
    "sk": _convert_sklearn,
    "torch": _convert_torch,
    "keras": _convert_keras,
    "lgb": _convert_lgb,
    "xgb": _convert_xgb,
}


def convert_model(model, framework):
    """Interchange document (dict) for a trained model."""
    return _CONVERTERS[framework](model)


def export_model(job: ExportJob):
    """Write the interchange file and round-trip validate it."""
    doc = convert_model(job.model, job.framework)
    text = json.dumps(doc)
    with open(job.out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")
    load_predictor(job.out_path)  # must validate, or the export is broken
    return job.out_path


# ---------------------------------------------------------------------------
# verification


def _framework_outputs(model, framework, X):
    """(mode, values): raw scores, or predicted class indices."""
    if framework == "sk":
        if hasattr(model, "classes_"):
            proba = np.asarray(model.predict_proba(X), dtype=float)
            if hasattr(model, "coefs_"):
                # softmax hides the raw scores; compare classes only
                return "classes", np.argmax(proba, axis=1).astype(float)
            return "scores", proba
        return "scores", np.asarray(model.predict(X), dtype=float)
    if framework == "torch":
        import torch

        dtype = next(model.parameters()).dtype
        with torch.no_grad():
            out = model(torch.as_tensor(X, dtype=dtype))
        return "scores", out.cpu().numpy().astype(float)
    if framework == "keras":
        return "scores", np.asarray(model(X)).astype(float)
    raise UnsupportedModelError(f"verification not available for {framework}")


def verify_export(job: ExportJob, n_samples=1000, box=None, seed=0,
                  threshold=1e-6):
    """Max deviation between framework predictions and the exported file.

    Samples uniformly from box (default [-1, 1] per feature).  Score-level
    comparisons use relative deviation |a - b| / max(1, |a|); class-level
    comparisons count any index mismatch as deviation 1.  Raises when the
    worst deviation exceeds the threshold, reporting the offending sample.
    """
    p = load_predictor(job.out_path)
    rng = np.random.default_rng(seed)
    box = box or [(-1.0, 1.0)] * p.input_dim
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    X = rng.uniform(lo, hi, size=(n_samples, p.input_dim))

    mode, want = _framework_outputs(job.model, job.framework, X)
    worst = 0.0
    worst_x = None
    for i in range(n_samples):
        if mode == "classes":
            got = evaluate(p, X[i])[0]
            dev = 0.0 if got == want[i] else 1.0
        else:
            got = np.asarray(score_eval(p, X[i]), dtype=float)
            ref = np.atleast_1d(np.asarray(want[i], dtype=float))
            dev = float(np.max(np.abs(got - ref) / np.maximum(1.0, np.abs(ref))))
        if dev > worst:
            worst, worst_x = dev, X[i]
    if worst > threshold:
        raise VerificationError(
            f"max deviation {worst:.3e} exceeds {threshold:.0e} at sample "
            f"{np.asarray(worst_x).tolist()}"
        )
    return worst
