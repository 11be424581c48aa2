"""Framework-neutral trained predictors and their exact forward evaluation.

A :class:`Predictor` wraps one of four cores (linear model, decision tree,
tree ensemble, feed-forward ReLU network) together with an output head.
The evaluator here is the ground truth that every MIP embedding is checked
against.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AffineLayer",
    "NeuralNet",
    "Split",
    "Leaf",
    "Ensemble",
    "LinearModel",
    "Predictor",
    "PredictorParseError",
    "PredictorValidationError",
    "UnsupportedActivationError",
    "load_predictor",
    "loads_predictor",
    "dump_predictor",
    "evaluate",
    "score_eval",
    "dims",
    "leaves",
    "tree_splits",
    "traverse_leaf_index",
]


class PredictorParseError(ValueError):
    """Raised when a predictor file is not valid interchange JSON."""


class PredictorValidationError(ValueError):
    """Raised when a structurally valid file violates a model invariant."""


class UnsupportedActivationError(PredictorValidationError):
    """Raised for activation names we refuse to embed (sigmoid, tanh, ...)."""


def _require_finite(arr, where):
    if not np.all(np.isfinite(arr)):
        raise PredictorValidationError(f"non-finite value in {where}")


@dataclass(frozen=True)
class AffineLayer:
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray  # (out_dim,)
    activation: str  # "relu" | "identity"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        if w.ndim != 2:
            raise PredictorValidationError("weights: expected a matrix")
        if b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise PredictorValidationError(
                f"bias: length {b.shape} does not match weight rows {w.shape[0]}"
            )
        _require_finite(w, "weights")
        _require_finite(b, "bias")
        if self.activation not in ("relu", "identity"):
            raise UnsupportedActivationError(
                f"unsupported activation {self.activation!r}"
            )
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self):
        return self.weights.shape[1]

    @property
    def out_dim(self):
        return self.weights.shape[0]


@dataclass(frozen=True)
class NeuralNet:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise PredictorValidationError("layers: network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise PredictorValidationError(
                    f"layers: dimension mismatch {prev.out_dim} -> {nxt.in_dim}"
                )
        if layers[-1].activation != "identity":
            raise PredictorValidationError("layers: final activation must be identity")
        object.__setattr__(self, "layers", layers)

    @property
    def in_dim(self):
        return self.layers[0].in_dim

    @property
    def out_dim(self):
        return self.layers[-1].out_dim


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: object  # Split | Leaf
    right: object

    def __post_init__(self):
        if not math.isfinite(self.threshold):
            raise PredictorValidationError("threshold: must be finite")
        if self.feature < 0:
            raise PredictorValidationError("feature: negative index")


@dataclass(frozen=True)
class Leaf:
    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        _require_finite(v, "leaf")
        object.__setattr__(self, "values", v)


def _tree_check(node, input_dim, out_dim=None):
    """Validate feature indices and a consistent leaf dimension; return out_dim."""
    if isinstance(node, Leaf):
        d = node.values.shape[0]
        if out_dim is not None and d != out_dim:
            raise PredictorValidationError("leaf: inconsistent output dimension")
        return d
    if node.feature >= input_dim:
        raise PredictorValidationError(
            f"feature: index {node.feature} >= input_dim {input_dim}"
        )
    out_dim = _tree_check(node.left, input_dim, out_dim)
    return _tree_check(node.right, input_dim, out_dim)


def leaves(root):
    """Leaves of a tree in deterministic left-to-right order."""
    if isinstance(root, Leaf):
        return [root]
    return leaves(root.left) + leaves(root.right)


def tree_splits(root):
    """All (feature, threshold) pairs appearing in a tree."""
    if isinstance(root, Leaf):
        return []
    return [(root.feature, root.threshold)] + tree_splits(root.left) + tree_splits(root.right)


def traverse_leaf_index(root, x):
    """Index (left-to-right order) of the leaf reached by x; ties go left."""
    idx = 0
    node = root
    while isinstance(node, Split):
        if x[node.feature] <= node.threshold:
            node = node.left
        else:
            idx += len(leaves(node.left))
            node = node.right
    return idx


@dataclass(frozen=True)
class Ensemble:
    trees: tuple
    combine: str  # "sum" | "mean"
    base_offset: np.ndarray

    def __post_init__(self):
        trees = tuple(self.trees)
        if self.combine not in ("sum", "mean"):
            raise PredictorValidationError(f"combine: unknown mode {self.combine!r}")
        if self.combine == "mean" and not trees:
            raise PredictorValidationError("trees: mean combine needs at least one tree")
        base = np.atleast_1d(np.asarray(self.base_offset, dtype=float))
        _require_finite(base, "base_offset")
        object.__setattr__(self, "trees", trees)
        object.__setattr__(self, "base_offset", base)


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        b = np.atleast_1d(np.asarray(self.bias, dtype=float))
        if w.ndim != 2:
            raise PredictorValidationError("weights: expected a matrix")
        if w.shape[0] != b.shape[0]:
            raise PredictorValidationError(
                f"bias: length {b.shape[0]} does not match weight rows {w.shape[0]}"
            )
        _require_finite(w, "weights")
        _require_finite(b, "bias")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class Predictor:
    core: object
    head: str  # "regression" | "argmax_classification"
    input_dim: int
    score_dim: int = field(init=False)
    output_dim: int = field(init=False)

    def __post_init__(self):
        core = self.core
        if isinstance(core, LinearModel):
            if core.weights.shape[1] != self.input_dim:
                raise PredictorValidationError("weights: columns != input_dim")
            score = core.weights.shape[0]
        elif isinstance(core, (Split, Leaf)):
            score = _tree_check(core, self.input_dim)
        elif isinstance(core, Ensemble):
            score = core.base_offset.shape[0]
            for t in core.trees:
                d = _tree_check(t, self.input_dim)
                if d != score:
                    raise PredictorValidationError(
                        "trees: leaf dimension != base_offset length"
                    )
        elif isinstance(core, NeuralNet):
            if core.in_dim != self.input_dim:
                raise PredictorValidationError("layers: first layer != input_dim")
            score = core.out_dim
        else:
            raise PredictorValidationError(f"unsupported core {type(core).__name__}")
        if self.head not in ("regression", "argmax_classification"):
            raise PredictorValidationError(f"unknown head {self.head!r}")
        if self.head == "argmax_classification" and score < 2:
            raise PredictorValidationError("head: argmax needs score dimension >= 2")
        object.__setattr__(self, "score_dim", score)
        object.__setattr__(
            self, "output_dim", 1 if self.head == "argmax_classification" else score
        )


def _eval_tree(node, x):
    while isinstance(node, Split):
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.values


def score_eval(p: Predictor, x) -> np.ndarray:
    """Pre-head score vector of the predictor at input x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.input_dim,):
        raise ValueError(f"input length {x.shape} != input_dim {p.input_dim}")
    core = p.core
    if isinstance(core, LinearModel):
        return core.weights @ x + core.bias
    if isinstance(core, (Split, Leaf)):
        return np.array(_eval_tree(core, x), dtype=float)
    if isinstance(core, Ensemble):
        acc = np.zeros_like(core.base_offset)
        for t in core.trees:
            acc = acc + _eval_tree(t, x)
        if core.combine == "mean":
            acc = acc / len(core.trees)
        return acc + core.base_offset
    # neural net
    h = x
    for layer in core.layers:
        h = layer.weights @ h + layer.bias
        if layer.activation == "relu":
            h = np.maximum(h, 0.0)
    return h


def evaluate(p: Predictor, x) -> np.ndarray:
    """Post-head output; argmax heads return the smallest maximising index."""
    scores = score_eval(p, x)
    if p.head == "argmax_classification":
        return np.array([float(np.argmax(scores))])
    return scores


def dims(p: Predictor):
    """(input_dim, score_dim, output_dim) of a predictor."""
    return (p.input_dim, p.score_dim, p.output_dim)


# ---------------------------------------------------------------------------
# interchange format


def _parse_node(obj, path):
    if not isinstance(obj, dict):
        raise PredictorParseError(f"{path}: expected object")
    if "leaf" in obj:
        return Leaf(np.asarray(obj["leaf"], dtype=float))
    if "split" in obj:
        s = obj["split"]
        for key in ("feature", "threshold", "left", "right"):
            if key not in s:
                raise PredictorParseError(f"{path}.split: missing {key!r}")
        return Split(
            int(s["feature"]),
            float(s["threshold"]),
            _parse_node(s["left"], path + ".left"),
            _parse_node(s["right"], path + ".right"),
        )
    raise PredictorParseError(f"{path}: node needs 'split' or 'leaf'")


_HEADS = {"regression": "regression", "argmax": "argmax_classification"}


def loads_predictor(text: str) -> Predictor:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PredictorParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise PredictorParseError("top level: expected object")
    for key in ("kind", "head", "input_dim"):
        if key not in doc:
            raise PredictorParseError(f"top level: missing {key!r}")
    kind = doc["kind"]
    head = doc["head"]
    if head not in _HEADS:
        raise PredictorValidationError(f"head: unknown value {head!r}")
    input_dim = int(doc["input_dim"])
    if kind == "linear":
        core = LinearModel(np.asarray(doc["weights"], dtype=float), doc["bias"])
    elif kind == "tree":
        core = _parse_node(doc["tree"] if "tree" in doc else doc, "tree")
    elif kind in ("forest", "gbdt"):
        trees = [_parse_node(t, f"trees[{i}]") for i, t in enumerate(doc.get("trees", []))]
        combine = doc.get("combine", "mean" if kind == "forest" else "sum")
        core = Ensemble(tuple(trees), combine, np.asarray(doc.get("base_offset", [0.0]), dtype=float))
    elif kind == "neural_net":
        layers = []
        for i, spec in enumerate(doc.get("layers", [])):
            if "activation" not in spec:
                raise PredictorParseError(f"layers[{i}]: missing 'activation'")
            layers.append(
                AffineLayer(
                    np.asarray(spec["weights"], dtype=float),
                    np.asarray(spec["bias"], dtype=float),
                    spec["activation"],
                )
            )
        core = NeuralNet(tuple(layers))
    else:
        raise PredictorValidationError(f"kind: unknown value {kind!r}")
    return Predictor(core, _HEADS[head], input_dim)


def load_predictor(path) -> Predictor:
    """Load and validate a predictor from an interchange JSON file."""
    with open(path, encoding="utf-8") as fh:
        return loads_predictor(fh.read())


def _dump_node(node):
    if isinstance(node, Leaf):
        return {"leaf": [float(v) for v in node.values]}
    return {
        "split": {
            "feature": node.feature,
            "threshold": node.threshold,
            "left": _dump_node(node.left),
            "right": _dump_node(node.right),
        }
    }


def dump_predictor(p: Predictor) -> str:
    """Serialise a predictor back to interchange JSON."""
    head = "argmax" if p.head == "argmax_classification" else "regression"
    core = p.core
    if isinstance(core, LinearModel):
        doc = {
            "kind": "linear",
            "head": head,
            "input_dim": p.input_dim,
            "weights": core.weights.tolist(),
            "bias": core.bias.tolist(),
        }
    elif isinstance(core, (Split, Leaf)):
        doc = {"kind": "tree", "head": head, "input_dim": p.input_dim, "tree": _dump_node(core)}
    elif isinstance(core, Ensemble):
        kind = "forest" if core.combine == "mean" else "gbdt"
        doc = {
            "kind": kind,
            "head": head,
            "input_dim": p.input_dim,
            "trees": [_dump_node(t) for t in core.trees],
            "combine": core.combine,
            "base_offset": core.base_offset.tolist(),
        }
    else:
        doc = {
            "kind": "neural_net",
            "head": head,
            "input_dim": p.input_dim,
            "layers": [
                {
                    "weights": layer.weights.tolist(),
                    "bias": layer.bias.tolist(),
                    "activation": layer.activation,
                }
                for layer in core.layers
            ],
        }
    return json.dumps(doc)
