"""Compile predictors into MIP constraint blocks.

Supported formulations: big-M and SOS1 ReLU neurons, leaf-indicator decision
trees with a configurable split tolerance, ensembles as linear combinations,
an SOS1-based argmax block, plus the exact absolute-value and two-way min
linearisations the instance generators rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mip import BINARY, CONTINUOUS, INF, INTEGER, IndicatorCons, LinCons, Sos1Cons
from .predictors import (
    Ensemble,
    Leaf,
    LinearModel,
    NeuralNet,
    Predictor,
    Split,
    leaves,
)

__all__ = [
    "EmbedError",
    "EmbedOptions",
    "EmbeddingResult",
    "embed_predictor",
    "embed_linear",
    "embed_tree",
    "embed_ensemble",
    "embed_argmax",
    "embed_relu_bigm",
    "embed_relu_sos1",
    "propagate_bounds",
    "encode_abs_exact",
    "encode_min2",
]


class EmbedError(ValueError):
    pass


@dataclass
class EmbedOptions:
    relu_formulation: str = "bigm"  # "bigm" | "sos1"
    epsilon: float = 0.0
    input_box: list = None  # optional [(lb, ub), ...]

    def __post_init__(self):
        if self.relu_formulation not in ("bigm", "sos1"):
            raise EmbedError(f"unknown relu formulation {self.relu_formulation!r}")
        if self.epsilon < 0:
            raise EmbedError("epsilon must be >= 0")
        if self.input_box is not None:
            for lb, ub in self.input_box:
                if lb > ub:
                    raise EmbedError("input box has crossed bounds")


@dataclass
class EmbeddingResult:
    input_vars: list
    score_vars: list
    output_vars: list
    aux_vars: dict = field(default_factory=dict)
    constraints: list = field(default_factory=list)


def _terms(coefs, vids):
    return tuple((float(c), v) for c, v in zip(coefs, vids) if c != 0.0)


# ---------------------------------------------------------------------------
# ReLU neurons


def embed_relu_bigm(model, pre_terms, bias, l, u, prefix="n"):
    """Big-M block for y = max(0, pre) with pre-activation bounds [l, u].

    Stable neurons short-circuit: u <= 0 fixes y to 0, l >= 0 degrades to a
    plain equality.  Returns (y_id, z_id); z_id is None for stable neurons.
    """
    if not (math.isfinite(l) and math.isfinite(u)):
        raise EmbedError(f"unbounded input for big-M ({prefix})")
    if l > u:
        raise EmbedError("crossed pre-activation bounds")
    pre_terms = tuple(pre_terms)
    bias = float(bias)
    if u <= 0.0:
        y = model.add_var(CONTINUOUS, 0.0, 0.0, f"{prefix}_y")
        return y, None
    if l >= 0.0:
        y = model.add_var(CONTINUOUS, l, u, f"{prefix}_y")
        model.add_lin(((1.0, y),) + tuple((-c, v) for c, v in pre_terms), "=", bias,
                      f"{prefix}_eq")
        return y, None
    y = model.add_var(CONTINUOUS, 0.0, u, f"{prefix}_y")
    z = model.add_var(BINARY, 0.0, 1.0, f"{prefix}_z")
    neg = tuple((-c, v) for c, v in pre_terms)
    model.add_lin(((1.0, y),) + neg, ">=", bias, f"{prefix}_ge")
    model.add_lin(((1.0, y),) + neg + ((-l, z),), "<=", bias - l, f"{prefix}_ub1")
    model.add_lin(((1.0, y), (-u, z)), "<=", 0.0, f"{prefix}_ub2")
    return y, z


def embed_relu_sos1(model, pre_terms, bias, prefix="n", l=None, u=None):
    """SOS1 block for y = max(0, pre); valid without any bounds.

    Optional pre-activation bounds only tighten the variable boxes (keeps
    node relaxations bounded); the formulation itself needs none.
    """
    y_ub = INF if u is None else max(float(u), 0.0)
    s_ub = INF if l is None else max(-float(l), 0.0)
    y = model.add_var(CONTINUOUS, 0.0, y_ub, f"{prefix}_y")
    s = model.add_var(CONTINUOUS, 0.0, s_ub, f"{prefix}_s")
    model.add_lin(
        ((1.0, y), (-1.0, s)) + tuple((-c, v) for c, v in pre_terms),
        "=",
        float(bias),
        f"{prefix}_eq",
    )
    model.add_constraint(Sos1Cons((s, y), (1.0, 2.0), f"{prefix}_sos"))
    return y, s


def propagate_bounds(net: NeuralNet, input_box):
    """Interval-arithmetic pre-activation bounds, one (l, u) pair per layer."""
    lo = np.array([b[0] for b in input_box], dtype=float)
    hi = np.array([b[1] for b in input_box], dtype=float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise EmbedError("unbounded input for big-M bound propagation")
    out = []
    for layer in net.layers:
        w, b = layer.weights, layer.bias
        l = b + np.minimum(w * lo, w * hi).sum(axis=1)
        u = b + np.maximum(w * lo, w * hi).sum(axis=1)
        out.append((l, u))
        if layer.activation == "relu":
            lo, hi = np.maximum(l, 0.0), np.maximum(u, 0.0)
        else:
            lo, hi = l, u
    return out


# ---------------------------------------------------------------------------
# linear / tree / ensemble cores


def embed_linear(model, lm: LinearModel, input_vars, out_vars, prefix="lin"):
    cids = []
    for j in range(lm.weights.shape[0]):
        cids.append(
            model.add_lin(
                ((1.0, out_vars[j]),) + _terms(-lm.weights[j], input_vars),
                "=",
                float(lm.bias[j]),
                f"{prefix}_o{j}",
            )
        )
    return EmbeddingResult(list(input_vars), list(out_vars), list(out_vars),
                           {"kind": "linear"}, cids)


def _leaf_paths(node, path=()):
    """(edges, leaf) per leaf; an edge is (feature, threshold, is_left)."""
    if isinstance(node, Leaf):
        return [(path, node)]
    left = _leaf_paths(node.left, path + ((node.feature, node.threshold, True),))
    right = _leaf_paths(node.right, path + ((node.feature, node.threshold, False),))
    return left + right


def embed_tree(model, root, input_vars, out_vars, epsilon=0.0, prefix="t"):
    """Leaf-indicator formulation of a single decision tree.

    One binary per leaf, a choose-exactly-one row, and per leaf one indicator
    for every edge on its path: left edges x <= theta - eps/2, right edges
    x >= theta + eps/2.
    """
    paths = _leaf_paths(root)
    cids = []
    deltas = []
    for li, (edges, _) in enumerate(paths):
        d = model.add_var(BINARY, 0.0, 1.0, f"{prefix}_d{li}")
        deltas.append(d)
        for ei, (feat, theta, is_left) in enumerate(edges):
            if is_left:
                implied = LinCons(((1.0, input_vars[feat]),), "<=",
                                  theta - epsilon / 2.0, f"{prefix}_d{li}_e{ei}")
            else:
                implied = LinCons(((1.0, input_vars[feat]),), ">=",
                                  theta + epsilon / 2.0, f"{prefix}_d{li}_e{ei}")
            cids.append(model.add_constraint(
                IndicatorCons(d, 1, implied, f"{prefix}_d{li}_e{ei}_ind")))
    cids.append(model.add_lin(((1.0, d) for d in deltas), "=", 1.0, f"{prefix}_one"))
    out_dim = paths[0][1].values.shape[0]
    for j in range(out_dim):
        terms = [(1.0, out_vars[j])]
        terms += [(-float(leaf.values[j]), d) for (_, leaf), d in zip(paths, deltas)]
        cids.append(model.add_lin(terms, "=", 0.0, f"{prefix}_o{j}"))
    return EmbeddingResult(
        list(input_vars), list(out_vars), list(out_vars),
        {"kind": "tree", "trees": [{"deltas": deltas, "out": list(out_vars)}]},
        cids,
    )


def _leaf_value_range(root):
    vals = np.array([leaf.values for leaf in leaves(root)])
    return vals.min(axis=0), vals.max(axis=0)


def embed_ensemble(model, e: Ensemble, input_vars, out_vars, epsilon=0.0, prefix="f"):
    """Each tree gets fresh intermediate outputs, combined linearly."""
    cids = []
    tree_aux = []
    n = len(e.trees)
    coef = 1.0 / n if e.combine == "mean" and n else 1.0
    out_dim = e.base_offset.shape[0]
    tree_outs = []
    for k, root in enumerate(e.trees):
        lo, hi = _leaf_value_range(root)
        touts = [
            model.add_var(CONTINUOUS, float(lo[j]), float(hi[j]), f"{prefix}_t{k}_o{j}")
            for j in range(out_dim)
        ]
        sub = embed_tree(model, root, input_vars, touts, epsilon, f"{prefix}_t{k}")
        cids += sub.constraints
        tree_aux.append({"deltas": sub.aux_vars["trees"][0]["deltas"], "out": touts})
        tree_outs.append(touts)
    for j in range(out_dim):
        terms = [(1.0, out_vars[j])] + [(-coef, touts[j]) for touts in tree_outs]
        cids.append(model.add_lin(terms, "=", float(e.base_offset[j]), f"{prefix}_o{j}"))
    return EmbeddingResult(
        list(input_vars), list(out_vars), list(out_vars),
        {"kind": "ensemble", "combine": e.combine, "trees": tree_aux},
        cids,
    )


# ---------------------------------------------------------------------------
# argmax


def embed_argmax(model, score_vars, with_index=False, prefix="am"):
    """SOS1 argmax block over the score variables (0-based class indices)."""
    if len(score_vars) < 2:
        raise EmbedError("argmax needs at least 2 scores")
    cids = []
    m = model.add_var(CONTINUOUS, -INF, INF, f"{prefix}_max")
    zs, ss = [], []
    for j, y in enumerate(score_vars):
        s = model.add_var(CONTINUOUS, 0.0, INF, f"{prefix}_s{j}")
        z = model.add_var(BINARY, 0.0, 1.0, f"{prefix}_z{j}")
        cids.append(model.add_lin(((1.0, y), (1.0, s), (-1.0, m)), "=", 0.0,
                                  f"{prefix}_eq{j}"))
        cids.append(model.add_constraint(
            Sos1Cons((z, s), (1.0, 2.0), f"{prefix}_sos{j}")))
        zs.append(z)
        ss.append(s)
    cids.append(model.add_lin(((1.0, z) for z in zs), "=", 1.0, f"{prefix}_one"))
    a = None
    if with_index:
        a = model.add_var(INTEGER, 0.0, len(score_vars) - 1, f"{prefix}_idx")
        terms = [(1.0, a)] + [(-float(j), z) for j, z in enumerate(zs) if j]
        cids.append(model.add_lin(terms, "=", 0.0, f"{prefix}_idx_eq"))
    return EmbeddingResult(
        list(score_vars), list(score_vars), [a] if a is not None else [],
        {"kind": "argmax", "argmax": {"m": m, "s": ss, "z": zs, "a": a}},
        cids,
    )


# ---------------------------------------------------------------------------
# linearisation helpers


def encode_abs_exact(model, expr_terms, expr_const, M, prefix="abs"):
    """Exact |expr| via a binary: returns d with d == |expr| at feastol 0.

    M must dominate sup |expr| over the variable bounds.
    """
    if not math.isfinite(M):
        raise EmbedError("abs encoding needs a finite M")
    e = tuple(expr_terms)
    c = float(expr_const)
    neg = tuple((-co, v) for co, v in e)
    d = model.add_var(CONTINUOUS, 0.0, INF, f"{prefix}_d")
    b = model.add_var(BINARY, 0.0, 1.0, f"{prefix}_b")
    model.add_lin(((1.0, d),) + neg, ">=", c, f"{prefix}_ge_pos")
    model.add_lin(((1.0, d),) + e, ">=", -c, f"{prefix}_ge_neg")
    model.add_lin(((1.0, d),) + neg + ((2.0 * M, b),), "<=", c + 2.0 * M,
                  f"{prefix}_le_pos")
    model.add_lin(((1.0, d),) + e + ((-2.0 * M, b),), "<=", -c, f"{prefix}_le_neg")
    return d


def encode_min2(model, e1_terms, e1_const, e2_terms, e2_const, M, prefix="min"):
    """Exact min(e1, e2) via a binary; M must dominate |e1 - e2|."""
    if not math.isfinite(M):
        raise EmbedError("min encoding needs a finite M")
    n1 = tuple((-c, v) for c, v in e1_terms)
    n2 = tuple((-c, v) for c, v in e2_terms)
    m = model.add_var(CONTINUOUS, -INF, INF, f"{prefix}_m")
    b = model.add_var(BINARY, 0.0, 1.0, f"{prefix}_b")
    model.add_lin(((1.0, m),) + n1, "<=", float(e1_const), f"{prefix}_le1")
    model.add_lin(((1.0, m),) + n2, "<=", float(e2_const), f"{prefix}_le2")
    model.add_lin(((1.0, m),) + n1 + ((-M, b),), ">=", float(e1_const) - M,
                  f"{prefix}_ge1")
    model.add_lin(((1.0, m),) + n2 + ((M, b),), ">=", float(e2_const), f"{prefix}_ge2")
    return m


# ---------------------------------------------------------------------------
# dispatcher


def _resolve_box(model, input_vars, opts):
    if opts.input_box is not None:
        return list(opts.input_box)
    return [(model.vars[v].lb, model.vars[v].ub) for v in input_vars]


def _embed_net(model, net, input_vars, out_vars, opts, prefix):
    cids = []
    layers_aux = []
    h = list(input_vars)
    box = _resolve_box(model, input_vars, opts)
    box_finite = all(math.isfinite(lb) and math.isfinite(ub) for lb, ub in box)
    if opts.relu_formulation == "bigm":
        if not box_finite:
            raise EmbedError("unbounded input for big-M formulation")
        bounds = propagate_bounds(net, box)
    elif box_finite:
        # not required for SOS1 correctness, but keeps relaxations bounded
        bounds = propagate_bounds(net, box)
    else:
        bounds = [None] * len(net.layers)
    n_cons0 = len(model._cons_by_id)
    for k, layer in enumerate(net.layers[:-1]):
        ys, zs, ss = [], [], []
        for j in range(layer.out_dim):
            pre = _terms(layer.weights[j], h)
            name = f"{prefix}_l{k}_n{j}"
            if opts.relu_formulation == "bigm":
                l, u = bounds[k][0][j], bounds[k][1][j]
                y, z = embed_relu_bigm(model, pre, layer.bias[j], l, u, name)
                zs.append(z)
                ss.append(None)
            else:
                if bounds[k] is not None:
                    l, u = bounds[k][0][j], bounds[k][1][j]
                else:
                    l = u = None
                y, s = embed_relu_sos1(model, pre, layer.bias[j], name, l, u)
                zs.append(None)
                ss.append(s)
            ys.append(y)
        layers_aux.append({"y": ys, "z": zs, "s": ss})
        h = ys
    last = net.layers[-1]
    for j in range(last.out_dim):
        model.add_lin(
            ((1.0, out_vars[j]),) + _terms(-last.weights[j], h),
            "=",
            float(last.bias[j]),
            f"{prefix}_out{j}",
        )
    cids = list(range(n_cons0, len(model._cons_by_id)))
    return EmbeddingResult(
        list(input_vars), list(out_vars), list(out_vars),
        {"kind": "net", "formulation": opts.relu_formulation, "layers": layers_aux},
        cids,
    )


def _output_bounds(p: Predictor, opts, model, input_vars):
    """Bounds for implicitly created score variables."""
    core = p.core
    if isinstance(core, (Split, Leaf)):
        lo, hi = _leaf_value_range(core)
        return list(zip(lo, hi))
    if isinstance(core, Ensemble):
        lo = np.array(core.base_offset, dtype=float)
        hi = np.array(core.base_offset, dtype=float)
        coef = 1.0 / len(core.trees) if core.combine == "mean" else 1.0
        for t in core.trees:
            tlo, thi = _leaf_value_range(t)
            lo = lo + coef * tlo
            hi = hi + coef * thi
        return list(zip(lo, hi))
    if isinstance(core, LinearModel):
        box = _resolve_box(model, input_vars, opts)
        if all(math.isfinite(lb) and math.isfinite(ub) for lb, ub in box):
            lo = np.array([b[0] for b in box])
            hi = np.array([b[1] for b in box])
            w = core.weights
            l = core.bias + np.minimum(w * lo, w * hi).sum(axis=1)
            u = core.bias + np.maximum(w * lo, w * hi).sum(axis=1)
            return list(zip(l, u))
    if isinstance(core, NeuralNet):
        box = _resolve_box(model, input_vars, opts)
        if all(math.isfinite(lb) and math.isfinite(ub) for lb, ub in box):
            l, u = propagate_bounds(core, box)[-1]
            return list(zip(l, u))
        if opts.relu_formulation == "bigm":
            raise EmbedError("unbounded input for big-M formulation")
    return [(-INF, INF)] * p.score_dim


def embed_predictor(model, p: Predictor, input_vars, output_vars=None,
                    opts: EmbedOptions = None, prefix=None):
    """Formulate predictor p over the given input variables.

    Output variables are created when omitted (with bounds derived from the
    formulation).  For argmax heads the single output variable is the integer
    class index.
    """
    opts = opts or EmbedOptions()
    if prefix is None:
        prefix = f"e{len(model.vars)}"
    if len(input_vars) != p.input_dim:
        raise EmbedError(
            f"got {len(input_vars)} input vars, predictor wants {p.input_dim}"
        )
    if output_vars is not None and len(output_vars) != p.output_dim:
        raise EmbedError(
            f"got {len(output_vars)} output vars, predictor emits {p.output_dim}"
        )

    argmax_head = p.head == "argmax_classification"
    if argmax_head:
        sbounds = _output_bounds(p, opts, model, input_vars)
        score_vars = [
            model.add_var(CONTINUOUS, lb, ub, f"{prefix}_score{j}")
            for j, (lb, ub) in enumerate(sbounds)
        ]
    elif output_vars is None:
        sbounds = _output_bounds(p, opts, model, input_vars)
        score_vars = [
            model.add_var(CONTINUOUS, lb, ub, f"{prefix}_out{j}")
            for j, (lb, ub) in enumerate(sbounds)
        ]
    else:
        score_vars = list(output_vars)

    core = p.core
    if isinstance(core, LinearModel):
        res = embed_linear(model, core, input_vars, score_vars, prefix)
    elif isinstance(core, (Split, Leaf)):
        res = embed_tree(model, core, input_vars, score_vars, opts.epsilon, prefix)
    elif isinstance(core, Ensemble):
        res = embed_ensemble(model, core, input_vars, score_vars, opts.epsilon, prefix)
    elif isinstance(core, NeuralNet):
        res = _embed_net(model, core, input_vars, score_vars, opts, prefix)
    else:
        raise EmbedError(f"unsupported predictor core {type(core).__name__}")

    if argmax_head:
        am = embed_argmax(model, score_vars, with_index=True, prefix=prefix + "_am")
        out = am.output_vars if output_vars is None else list(output_vars)
        if output_vars is not None:
            # caller-provided index variable; tie it to the block's own
            model.add_lin(((1.0, output_vars[0]), (-1.0, am.output_vars[0])), "=",
                          0.0, f"{prefix}_am_tie")
        res = EmbeddingResult(
            list(input_vars), score_vars, out,
            {**res.aux_vars, "argmax": am.aux_vars["argmax"]},
            res.constraints + am.constraints,
        )
    else:
        res = EmbeddingResult(list(input_vars), score_vars, score_vars,
                              res.aux_vars, res.constraints)
    return res
