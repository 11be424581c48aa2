"""Seeded generators for the nine benchmark problem families.

Every generator is a pure function of an :class:`InstanceRecipe`.  The data
seed F drives all problem-side randomness (budgets, fixed features, costs)
and the train seed G drives predictor fabrication, so the two halves of an
instance can be varied independently.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .embed import (
    EmbedOptions,
    embed_predictor,
    encode_abs_exact,
    encode_min2,
)
from .lpio import write_mps
from .mip import BINARY, CONTINUOUS, INF, IndicatorCons, LinCons, MipModel
from .predictors import (
    AffineLayer,
    Ensemble,
    Leaf,
    LinearModel,
    NeuralNet,
    Predictor,
    Split,
    evaluate,
)

__all__ = [
    "FAMILIES",
    "PREDICTOR_KINDS",
    "RecipeError",
    "InstanceRecipe",
    "instance_name",
    "fabricate_predictor",
    "generate_instance",
    "write_instance",
]

FAMILIES = (
    "adversarial",
    "auto",
    "city",
    "function",
    "palatable",
    "tree",
    "water",
    "wine",
    "workload",
)

PREDICTOR_KINDS = ("linear", "dt", "gbdt", "rf", "mlp-sos", "mlp-bigm")

# families whose problem-parameter field is empty in the naming scheme
_NO_PARAMS = ("auto", "palatable", "workload")


class RecipeError(ValueError):
    pass


@dataclass(frozen=True)
class InstanceRecipe:
    family: str
    predictor_kind: str
    problem_params: tuple = ()
    predictor_params: tuple = ()
    framework: str = "synth"
    data_seed: int = 0
    train_seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise RecipeError(f"unknown family {self.family!r}")
        if self.predictor_kind not in PREDICTOR_KINDS:
            raise RecipeError(f"unknown predictor kind {self.predictor_kind!r}")
        object.__setattr__(self, "problem_params",
                           tuple(int(p) for p in self.problem_params))
        object.__setattr__(self, "predictor_params",
                           tuple(int(p) for p in self.predictor_params))
        _check_problem_params(self.family, self.problem_params)
        _check_predictor_params(self.predictor_kind, self.predictor_params)
        if not (0 <= self.data_seed < 2**64 and 0 <= self.train_seed < 2**64):
            raise RecipeError("seeds must be unsigned 64-bit")


def _check_problem_params(family, params):
    if family in _NO_PARAMS:
        if params:
            raise RecipeError(f"{family} takes no problem parameters")
        return
    want = 2 if family == "wine" else 1
    if len(params) != want or any(p <= 0 for p in params):
        raise RecipeError(
            f"{family} wants {want} positive problem parameter(s), got {params}"
        )
    if family == "wine" and params[1] < params[0]:
        raise RecipeError("wine needs at least as many vendors as blends")


def _check_predictor_params(kind, params):
    if kind == "linear":
        if params:
            raise RecipeError("linear predictors take no parameters")
        return
    want = 1 if kind == "dt" else 2
    if len(params) != want or any(p <= 0 for p in params):
        raise RecipeError(
            f"{kind} wants {want} positive parameter(s), got {params}"
        )


def instance_name(recipe: InstanceRecipe) -> str:
    """Flat file name: family_params_kind_kindparams_framework_F_G.mps."""
    parts = [recipe.family]
    if recipe.problem_params:
        parts.append("-".join(str(p) for p in recipe.problem_params))
    parts.append(recipe.predictor_kind)
    if recipe.predictor_params:
        parts.append("-".join(str(p) for p in recipe.predictor_params))
    parts += [recipe.framework, str(recipe.data_seed), str(recipe.train_seed)]
    return "_".join(parts) + ".mps"


# ---------------------------------------------------------------------------
# predictor fabrication


def _fab_tree(rng, box, depth, out_range, out_dim):
    lo, hi = out_range
    def build(d, sub):
        if d == 0:
            return Leaf(rng.uniform(lo, hi, size=out_dim))
        feat = int(rng.integers(0, len(sub)))
        a, b = sub[feat]
        # keep thresholds off the box edges so both children stay reachable
        theta = float(rng.uniform(a + 0.05 * (b - a), b - 0.05 * (b - a)))
        left_sub = [s if i != feat else (a, theta) for i, s in enumerate(sub)]
        right_sub = [s if i != feat else (theta, b) for i, s in enumerate(sub)]
        return Split(feat, theta, build(d - 1, left_sub), build(d - 1, right_sub))
    return build(depth, list(box))


def _rescale_rows(weights, bias, lo, hi, out_range):
    """Affinely map per-row interval [lo, hi] onto out_range."""
    r_lo, r_hi = out_range
    w = weights.copy()
    b = bias.copy()
    for r in range(w.shape[0]):
        span = hi[r] - lo[r]
        if span <= 0:
            w[r] = 0.0
            b[r] = (r_lo + r_hi) / 2.0
            continue
        scale = (r_hi - r_lo) / span
        w[r] *= scale
        b[r] = scale * b[r] + r_lo - scale * lo[r]
    return w, b


def fabricate_predictor(kind, input_dim, params, seed, input_box,
                        out_range=(-1.0, 1.0), score_dim=1, head="regression"):
    """Deterministic synthetic predictor; seed may be an int or a sequence."""
    if kind not in PREDICTOR_KINDS:
        raise RecipeError(f"unknown predictor kind {kind!r}")
    _check_predictor_params(kind, tuple(params))
    rng = np.random.default_rng(seed)
    box = [(float(a), float(b)) for a, b in input_box]
    if len(box) != input_dim:
        raise RecipeError("input box length != input_dim")
    lo_in = np.array([a for a, _ in box])
    hi_in = np.array([b for _, b in box])
    hd = "regression" if head == "regression" else "argmax_classification"

    if kind == "linear":
        w = rng.uniform(-1.0, 1.0, size=(score_dim, input_dim)) / math.sqrt(input_dim)
        b = rng.uniform(-1.0, 1.0, size=score_dim)
        lo = b + np.minimum(w * lo_in, w * hi_in).sum(axis=1)
        hi = b + np.maximum(w * lo_in, w * hi_in).sum(axis=1)
        w, b = _rescale_rows(w, b, lo, hi, out_range)
        return Predictor(LinearModel(w, b), hd, input_dim)

    if kind == "dt":
        (depth,) = params
        return Predictor(_fab_tree(rng, box, depth, out_range, score_dim),
                         hd, input_dim)

    if kind in ("gbdt", "rf"):
        k, depth = params
        if kind == "gbdt":
            leaf_range = (out_range[0] / k, out_range[1] / k)
            combine = "sum"
        else:
            leaf_range = out_range
            combine = "mean"
        trees = tuple(_fab_tree(rng, box, depth, leaf_range, score_dim)
                      for _ in range(k))
        return Predictor(Ensemble(trees, combine, np.zeros(score_dim)),
                         hd, input_dim)

    # mlp
    n_layers, width = params
    dims = [input_dim] + [width] * n_layers + [score_dim]
    layers = []
    for i in range(len(dims) - 1):
        fan_in = dims[i]
        w = rng.uniform(-1.0, 1.0, size=(dims[i + 1], fan_in)) / math.sqrt(fan_in)
        b = rng.uniform(-1.0, 1.0, size=dims[i + 1]) / math.sqrt(fan_in)
        act = "relu" if i < len(dims) - 2 else "identity"
        layers.append(AffineLayer(w, b, act))
    net = NeuralNet(tuple(layers))
    # map the interval-arithmetic output range of the raw net onto out_range
    from .embed import propagate_bounds
    lo, hi = propagate_bounds(net, box)[-1]
    last = net.layers[-1]
    w, b = _rescale_rows(last.weights, last.bias, lo, hi, out_range)
    layers[-1] = AffineLayer(w, b, "identity")
    return Predictor(NeuralNet(tuple(layers)), hd, input_dim)


def _embed_opts(kind):
    return EmbedOptions(relu_formulation="sos1" if kind == "mlp-sos" else "bigm")


def _sub_seed(recipe, index):
    return [recipe.train_seed, index]


def _fab(recipe, index, input_dim, input_box, out_range, score_dim=1,
         head="regression"):
    return fabricate_predictor(
        recipe.predictor_kind, input_dim, recipe.predictor_params,
        _sub_seed(recipe, index), input_box, out_range, score_dim, head,
    )


# ---------------------------------------------------------------------------
# manifest plumbing


def _names(model, vids):
    return [model.vars[v].name for v in vids]


def _embed_record(model, name, kind, res, opts):
    rec = {
        "name": name,
        "predictor_kind": kind,
        "inputs": _names(model, res.input_vars),
        "scores": _names(model, res.score_vars),
        "outputs": _names(model, [v for v in res.output_vars if v is not None]),
    }
    aux = res.aux_vars
    if aux.get("kind") == "net":
        rec["formulation"] = aux["formulation"]
        rec["layers"] = [
            {
                "y": _names(model, layer["y"]),
                "z": [None if z is None else model.vars[z].name
                      for z in layer["z"]],
                "s": [None if s is None else model.vars[s].name
                      for s in layer["s"]],
            }
            for layer in aux["layers"]
        ]
    if aux.get("kind") in ("tree", "ensemble"):
        rec["trees"] = [{"deltas": _names(model, t["deltas"])}
                       for t in aux["trees"]]
    if "argmax" in aux:
        am = aux["argmax"]
        rec["argmax"] = {
            "m": model.vars[am["m"]].name,
            "s": _names(model, am["s"]),
            "z": _names(model, am["z"]),
            "a": None if am["a"] is None else model.vars[am["a"]].name,
        }
    return rec


# ---------------------------------------------------------------------------
# family generators.  Each returns (model, embedding records).


def _gen_adversarial(recipe, rng):
    (n,) = recipe.problem_params
    dim = n * n
    box = [(0.0, 1.0)] * dim
    base = rng.uniform(0.0, 1.0, size=dim)
    delta = float(rng.uniform(0.5, 0.5 + 0.05 * dim))
    pred = _fab(recipe, 0, dim, box, (0.0, 1.0), score_dim=10)
    scores = np.asarray(evaluate(pred, base))
    true = int(np.argmax(scores))
    rest = [j for j in range(10) if j != true]
    second = rest[int(np.argmax(scores[rest]))]

    model = MipModel()
    xb = [model.add_var(CONTINUOUS, 0.0, 1.0, f"xb_{i}") for i in range(dim)]
    d = [model.add_var(CONTINUOUS, 0.0, 1.0, f"d_{i}") for i in range(dim)]
    for i in range(dim):
        model.add_lin(((1.0, xb[i]), (-1.0, d[i])), "<=", float(base[i]),
                      f"diff_pos_{i}")
        model.add_lin(((-1.0, xb[i]), (-1.0, d[i])), "<=", float(-base[i]),
                      f"diff_neg_{i}")
    model.add_lin(((1.0, v) for v in d), "<=", delta, "budget")
    res = embed_predictor(model, pred, xb, opts=_embed_opts(recipe.predictor_kind),
                          prefix="clf")
    model.set_objective("min", ((1.0, res.score_vars[second]),
                                (-1.0, res.score_vars[true])))
    return model, [_embed_record(model, "clf", recipe.predictor_kind, res, None)]


_AUTO_BOX = [
    (10.0, 50.0),   # fuel efficiency (index 0 per the efficiency floor)
    (0.0, 1.0),     # vehicle type
    (1.0, 8.0),     # engine size
    (50.0, 500.0),  # horsepower
    (85.0, 140.0),  # wheelbase
    (60.0, 80.0),   # width
    (140.0, 230.0), # length
    (1.5, 6.0),     # curb weight
    (10.0, 35.0),   # fuel capacity
    (20.0, 200.0),  # power performance factor
]


def _gen_auto(recipe, rng):
    box = _AUTO_BOX
    n_pop = 3
    popular = [np.array([rng.uniform(a, b) for a, b in box]) for _ in range(n_pop)]
    gamma = float(rng.uniform(0.5, 2.0))
    alpha = float(rng.uniform(0.3, 0.7))
    l0, u0 = box[0]
    beta = float(rng.uniform(l0, l0 + 0.5 * (u0 - l0)))

    opts = _embed_opts(recipe.predictor_kind)
    price_range = (5.0, 100.0)
    f = _fab(recipe, 0, 10, box, price_range)
    box11 = list(box) + [price_range]
    g = _fab(recipe, 1, 11, box11, (0.0, 1000.0))
    h = _fab(recipe, 2, 11, box11, (2.0, 80.0))

    model = MipModel()
    x = [model.add_var(CONTINUOUS, a, b, f"x_{i}") for i, (a, b) in enumerate(box)]
    rf = embed_predictor(model, f, x, opts=opts, prefix="price")
    y_price = rf.output_vars[0]
    rg = embed_predictor(model, g, x + [y_price], opts=opts, prefix="sold")
    rh = embed_predictor(model, h, x + [y_price], opts=opts, prefix="resell")
    y_sold, y_resell = rg.output_vars[0], rh.output_vars[0]

    for j, xbar in enumerate(popular):
        terms = []
        for i in range(10):
            span = box[i][1] - box[i][0]
            dv = encode_abs_exact(model, ((1.0, x[i]),), -float(xbar[i]),
                                  span, f"pop{j}_f{i}")
            terms.append((1.0 / span, dv))
        model.add_lin(terms, ">=", gamma, f"pop{j}_diff")
    model.add_lin(((1.0, y_resell), (-alpha, y_price)), ">=", 0.0, "resell_floor")
    model.add_lin(((1.0, x[0]),), ">=", beta, "efficiency_floor")
    model.set_objective("max", ((1.0, y_sold),))
    kind = recipe.predictor_kind
    return model, [
        _embed_record(model, "price", kind, rf, opts),
        _embed_record(model, "sold", kind, rg, opts),
        _embed_record(model, "resell", kind, rh, opts),
    ]


_CITY_GRID = 10.0
# amenities with two sites each; college (single site) handled separately
_CITY_AMENITIES = ("doctor", "post", "kinder", "restaurant", "pharmacy", "school")


def _city_box():
    two_m = 2.0 * _CITY_GRID
    return [
        (25.0, 120.0),  # square meters
        (1.0, 6.0),     # rooms
        (0.0, 10.0),    # floor
        (0.0, 1.0),     # parking
        (0.0, 1.0),     # balcony
        (0.0, 1.0),     # security
        (0.0, two_m),   # distance to town center
    ] + [(0.0, two_m)] * 7  # distances to the 6 paired amenities + college


def _gen_city(recipe, rng):
    (n,) = recipe.problem_params
    m_grid = _CITY_GRID
    gamma = float(rng.uniform(1.0, 4.0))
    box = _city_box()
    coords = rng.uniform(0.0, m_grid, size=(n, 2))
    fixed = []
    for i in range(n):
        center = abs(coords[i, 0] - m_grid / 2) + abs(coords[i, 1] - m_grid / 2)
        fixed.append([
            float(rng.uniform(25.0, 120.0)),
            float(rng.integers(1, 7)),
            float(rng.integers(0, 11)),
            float(rng.integers(0, 2)),
            float(rng.integers(0, 2)),
            float(rng.integers(0, 2)),
            float(center),
        ])
    pred = _fab(recipe, 0, 14, box, (50.0, 500.0))
    opts = _embed_opts(recipe.predictor_kind)

    model = MipModel()
    site = {}
    for j, am in enumerate(_CITY_AMENITIES):
        for q in range(2):
            site[am, q] = [model.add_var(CONTINUOUS, 0.0, m_grid, f"b_{am}{q}_{k}")
                           for k in range(2)]
    college = [model.add_var(CONTINUOUS, 0.0, m_grid, f"b_college_{k}")
               for k in range(2)]

    for am in _CITY_AMENITIES:
        sep = []
        for k in range(2):
            dv = encode_abs_exact(
                model, ((1.0, site[am, 0][k]), (-1.0, site[am, 1][k])), 0.0,
                m_grid, f"sep_{am}_{k}")
            sep.append(dv)
        model.add_lin(((1.0, sep[0]), (1.0, sep[1])), ">=", gamma, f"sep_{am}")

    records = []
    for i in range(n):
        xs = []
        for fidx in range(7):
            xs.append(model.add_var(CONTINUOUS, fixed[i][fidx], fixed[i][fidx],
                                    f"ap{i}_f{fidx}"))
        for fidx in range(7, 14):
            xs.append(model.add_var(CONTINUOUS, 0.0, 2.0 * m_grid, f"ap{i}_f{fidx}"))
        for j, am in enumerate(_CITY_AMENITIES):
            dist = []
            for q in range(2):
                ds = []
                for k in range(2):
                    dv = encode_abs_exact(
                        model, ((1.0, site[am, q][k]),), -float(coords[i, k]),
                        m_grid, f"ap{i}_{am}{q}_{k}")
                    ds.append(dv)
                dist.append(ds)
            mv = encode_min2(
                model, ((1.0, dist[0][0]), (1.0, dist[0][1])), 0.0,
                ((1.0, dist[1][0]), (1.0, dist[1][1])), 0.0,
                2.0 * m_grid, f"ap{i}_{am}_min")
            model.add_lin(((1.0, xs[7 + j]), (-1.0, mv)), "=", 0.0,
                          f"ap{i}_{am}_dist")
        cd = []
        for k in range(2):
            dv = encode_abs_exact(model, ((1.0, college[k]),),
                                  -float(coords[i, k]), m_grid, f"ap{i}_college_{k}")
            cd.append(dv)
        model.add_lin(((1.0, xs[13]), (-1.0, cd[0]), (-1.0, cd[1])), "=", 0.0,
                      f"ap{i}_college_dist")
        res = embed_predictor(model, pred, xs, opts=opts, prefix=f"price{i}")
        records.append(_embed_record(model, f"price{i}", recipe.predictor_kind,
                                     res, opts))
        if i == 0:
            obj = [(1.0, res.output_vars[0])]
        else:
            obj.append((1.0, res.output_vars[0]))
    model.set_objective("max", obj)
    return model, records


def _gen_function(recipe, rng):
    (n,) = recipe.problem_params
    box = [(-2.0, 2.0)] * n
    f = _fab(recipe, 0, n, box, (-5.0, 5.0))
    g = _fab(recipe, 1, n, box, (-5.0, 5.0))
    x0 = np.array([rng.uniform(a, b) for a, b in box])
    c = float(evaluate(g, x0)[0])
    opts = _embed_opts(recipe.predictor_kind)

    model = MipModel()
    x = [model.add_var(CONTINUOUS, a, b, f"x_{i}") for i, (a, b) in enumerate(box)]
    rf = embed_predictor(model, f, x, opts=opts, prefix="obj_fn")
    rg = embed_predictor(model, g, x, opts=opts, prefix="cons_fn")
    model.add_lin(((1.0, rg.output_vars[0]),), "=", c, "target")
    model.set_objective("min", ((1.0, rf.output_vars[0]),))
    kind = recipe.predictor_kind
    return model, [
        _embed_record(model, "obj_fn", kind, rf, opts),
        _embed_record(model, "cons_fn", kind, rg, opts),
    ]


_N_FOODS = 25
_N_NUTRIENTS = 12
_SALT, _SUGAR = 23, 24


def _gen_palatable(recipe, rng):
    box = [(0.0, 50.0)] * _N_FOODS
    nut = rng.uniform(0.0, 1.0, size=(_N_FOODS, _N_NUTRIENTS))
    cost = rng.uniform(1.0, 10.0, size=_N_FOODS)
    x0 = rng.uniform(0.0, 10.0, size=_N_FOODS)
    x0[_SALT], x0[_SUGAR] = 5.0, 20.0
    gamma = nut.T @ x0 * rng.uniform(0.5, 0.9, size=_N_NUTRIENTS)
    pred = _fab(recipe, 0, _N_FOODS, box, (0.0, 1.0))
    beta = float(evaluate(pred, x0)[0]) - 0.05
    opts = _embed_opts(recipe.predictor_kind)

    model = MipModel()
    x = [model.add_var(CONTINUOUS, 0.0, 50.0, f"x_{i}") for i in range(_N_FOODS)]
    for j in range(_N_NUTRIENTS):
        model.add_lin(((float(nut[i, j]), x[i]) for i in range(_N_FOODS)),
                      ">=", float(gamma[j]), f"nutrient_{j}")
    res = embed_predictor(model, pred, x, opts=opts, prefix="palat")
    model.add_lin(((1.0, res.output_vars[0]),), ">=", beta, "palatability")
    model.add_lin(((1.0, x[_SALT]),), "=", 5.0, "fix_salt")
    model.add_lin(((1.0, x[_SUGAR]),), "=", 20.0, "fix_sugar")
    model.set_objective("min", ((float(cost[i]), x[i]) for i in range(_N_FOODS)))
    return model, [_embed_record(model, "palat", recipe.predictor_kind, res, opts)]


_TREE_BOX = [
    (4.0, 8.0),    # soil pH
    (0.0, 1.0),    # light level
    (0.0, 1.0),    # moisture
    (-5.0, 35.0),  # temperature
    (0.0, 100.0),  # nitrogen
    (0.0, 1.0),    # planting density
    (0.0, 1.0),    # sterilised (the only free feature)
]
_N_SPECIES = 4


def _gen_tree(recipe, rng):
    (n,) = recipe.problem_params
    fixed = [[float(rng.uniform(a, b)) for a, b in _TREE_BOX[:6]] for _ in range(n)]
    gamma = rng.uniform(0.0, 0.3, size=_N_SPECIES)
    cost = rng.uniform(1.0, 3.0, size=_N_SPECIES)
    lo_cost = n * float(cost.min())
    hi_cost = n * float(cost.max())
    budget = float(rng.uniform(lo_cost, hi_cost))
    beta = int(rng.integers(0, n + 1))
    preds = [_fab(recipe, k, 7, _TREE_BOX, (0.0, 1.0)) for k in range(_N_SPECIES)]
    opts = _embed_opts(recipe.predictor_kind)

    model = MipModel()
    records = []
    obj = []
    sprime = {}
    sterile = []
    for i in range(n):
        xs = [model.add_var(CONTINUOUS, fixed[i][f], fixed[i][f], f"loc{i}_f{f}")
              for f in range(6)]
        st = model.add_var(BINARY, 0.0, 1.0, f"loc{i}_sterile")
        sterile.append(st)
        xs.append(st)
        for k in range(_N_SPECIES):
            res = embed_predictor(model, preds[k], xs, opts=opts,
                                  prefix=f"surv{i}_{k}")
            records.append(_embed_record(model, f"surv{i}_{k}",
                                         recipe.predictor_kind, res, opts))
            s = res.output_vars[0]
            sp = model.add_var(CONTINUOUS, 0.0, 1.0, f"adj{i}_{k}")
            p = model.add_var(BINARY, 0.0, 1.0, f"plant{i}_{k}")
            model.add_constraint(IndicatorCons(
                p, 1, LinCons(((1.0, sp), (-1.0, s)), "<=", 0.0,
                              f"cap{i}_{k}_on"), f"ind{i}_{k}_on"))
            model.add_constraint(IndicatorCons(
                p, 0, LinCons(((1.0, sp),), "<=", 0.0, f"cap{i}_{k}_off"),
                f"ind{i}_{k}_off"))
            sprime[i, k] = sp
            sprime.setdefault(("p", i), []).append(p)
            obj.append((1.0, sp))
    for i in range(n):
        model.add_lin(((1.0, p) for p in sprime["p", i]), "=", 1.0, f"one_species_{i}")
    for k in range(_N_SPECIES):
        model.add_lin(((1.0, sprime[i, k]) for i in range(n)), ">=",
                      float(gamma[k]), f"survival_min_{k}")
    model.add_lin(
        ((float(cost[k]), p) for i in range(n)
         for k, p in enumerate(sprime["p", i])),
        "<=", budget, "cost_budget")
    model.add_lin(((1.0, s) for s in sterile), "<=", float(beta), "sterile_budget")
    model.set_objective("max", obj)
    return model, records


_N_WATER_FEATURES = 9


def _gen_water(recipe, rng):
    (n,) = recipe.problem_params
    base_box = [(0.0, 10.0)] * _N_WATER_FEATURES
    w = rng.uniform(0.0, 10.0, size=(n, _N_WATER_FEATURES))
    gplus = rng.uniform(0.5, 5.0, size=_N_WATER_FEATURES)
    gminus = rng.uniform(0.5, 5.0, size=_N_WATER_FEATURES)
    # the classifier sees any treated sample, so its box covers all of them
    fab_box = [(min(w[:, j]) - gminus[j], max(w[:, j]) + gplus[j])
               for j in range(_N_WATER_FEATURES)]
    pred = _fab(recipe, 0, _N_WATER_FEATURES, fab_box, (-1.0, 1.0),
                score_dim=2, head="argmax")
    opts = _embed_opts(recipe.predictor_kind)

    model = MipModel()
    records = []
    a = {}
    b = {}
    obj = []
    for i in range(n):
        xs = []
        for j in range(_N_WATER_FEATURES):
            xs.append(model.add_var(
                CONTINUOUS, float(w[i, j] - gminus[j]), float(w[i, j] + gplus[j]),
                f"s{i}_f{j}"))
            a[i, j] = model.add_var(CONTINUOUS, 0.0, float(gplus[j]), f"a_{i}_{j}")
            b[i, j] = model.add_var(CONTINUOUS, 0.0, float(gminus[j]), f"b_{i}_{j}")
            model.add_lin(
                ((1.0, xs[j]), (-1.0, a[i, j]), (1.0, b[i, j])), "=",
                float(w[i, j]), f"link_{i}_{j}")
        res = embed_predictor(model, pred, xs, opts=opts, prefix=f"pot{i}")
        records.append(_embed_record(model, f"pot{i}", recipe.predictor_kind,
                                     res, opts))
        # class 1 is "drinkable"; its selector binary is the y_i of A.7
        obj.append((1.0, res.aux_vars["argmax"]["z"][1]))
    for j in range(_N_WATER_FEATURES):
        model.add_lin(((1.0, a[i, j]) for i in range(n)), "<=", float(gplus[j]),
                      f"budget_pos_{j}")
        model.add_lin(((1.0, b[i, j]) for i in range(n)), "<=", float(gminus[j]),
                      f"budget_neg_{j}")
    model.set_objective("max", obj)
    return model, records


_WINE_BOX = [
    (4.0, 16.0),    # fixed acidity
    (0.0, 1.5),     # volatile acidity
    (0.0, 1.0),     # citric acid
    (0.0, 15.0),    # residual sugar
    (0.0, 0.6),     # chlorides
    (1.0, 70.0),    # free sulfur
    (6.0, 300.0),   # total sulfur
    (0.98, 1.04),   # density
    (2.7, 4.0),     # pH
    (0.3, 2.0),     # sulphates
    (8.0, 15.0),    # alcohol
]


def _gen_wine(recipe, rng):
    n, m = recipe.problem_params
    w = np.array([[rng.uniform(a, b) for a, b in _WINE_BOX] for _ in range(m)])
    gamma = rng.uniform(n / m, 2.0 * n / m, size=m)
    cost = rng.uniform(1.0, 5.0, size=m)
    alpha = float(rng.uniform(0.0, 1.0))
    budget = float(rng.uniform(n * cost.mean(), n * cost.max()))
    blend_box = [(float(w[:, f].min()), float(w[:, f].max()))
                 for f in range(len(_WINE_BOX))]
    pred = _fab(recipe, 0, len(_WINE_BOX), blend_box, (0.0, 10.0))
    opts = _embed_opts(recipe.predictor_kind)

    model = MipModel()
    records = []
    bvars = {}
    obj = []
    for i in range(n):
        for j in range(m):
            bvars[i, j] = model.add_var(CONTINUOUS, 0.0, 1.0, f"b_{i}_{j}")
        xs = [model.add_var(CONTINUOUS, lo, hi, f"blend{i}_f{f}")
              for f, (lo, hi) in enumerate(blend_box)]
        for f in range(len(_WINE_BOX)):
            terms = [(1.0, xs[f])] + [(-float(w[j, f]), bvars[i, j])
                                      for j in range(m)]
            model.add_lin(terms, "=", 0.0, f"blend_{i}_{f}")
        model.add_lin(((1.0, bvars[i, j]) for j in range(m)), "=", 1.0,
                      f"blend_sum_{i}")
        y = model.add_var(CONTINUOUS, 0.0, 10.0, f"quality_{i}")
        res = embed_predictor(model, pred, xs, output_vars=[y], opts=opts,
                              prefix=f"qual{i}")
        records.append(_embed_record(model, f"qual{i}", recipe.predictor_kind,
                                     res, opts))
        model.add_lin(((1.0, y),), ">=", alpha, f"quality_floor_{i}")
        obj.append((1.0, y))
    for j in range(m):
        model.add_lin(((1.0, bvars[i, j]) for i in range(n)), "<=",
                      float(gamma[j]), f"supply_{j}")
    model.add_lin(((float(cost[j]), bvars[i, j]) for i in range(n)
                   for j in range(m)), "<=", budget, "grape_budget")
    model.set_objective("max", obj)
    return model, records


_WORKLOAD_CORES = 4
_WORKLOAD_JOBS = 8


def _workload_neighbors(n):
    side = int(round(math.sqrt(n)))
    if side * side != n:
        raise RecipeError("workload core count must be square")
    out = []
    for i in range(n):
        r, c = divmod(i, side)
        nb = []
        for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= rr < side and 0 <= cc < side:
                nb.append(rr * side + cc)
        out.append(sorted(set(nb)))
    return out


def _gen_workload(recipe, rng):
    n, m = _WORKLOAD_CORES, _WORKLOAD_JOBS
    cpi = rng.uniform(0.5, 2.0, size=m)
    neighbors = _workload_neighbors(n)
    cmax = float(cpi.max())
    feat_box = [(0.0, 2.0 * cmax)] * 3
    pred = _fab(recipe, 0, 3, feat_box, (0.0, 1.0))
    opts = _embed_opts(recipe.predictor_kind)

    model = MipModel()
    assign = {}
    for i in range(n):
        for j in range(m):
            assign[i, j] = model.add_var(BINARY, 0.0, 1.0, f"assign_{i}_{j}")
    for j in range(m):
        model.add_lin(((1.0, assign[i, j]) for i in range(n)), "=", 1.0,
                      f"job_{j}")
    for i in range(n):
        model.add_lin(((1.0, assign[i, j]) for j in range(m)), "=",
                      float(m // n), f"core_{i}")
    avg = [model.add_var(CONTINUOUS, 0.0, 2.0 * cmax, f"avg_{i}")
           for i in range(n)]
    for i in range(n):
        terms = [(1.0, avg[i])] + [(-(n / m) * float(cpi[j]), assign[i, j])
                                   for j in range(m)]
        model.add_lin(terms, "=", 0.0, f"avg_def_{i}")
    records = []
    obj_y = []
    for i in range(n):
        near = model.add_var(CONTINUOUS, 0.0, 2.0 * cmax, f"avg_near_{i}")
        far = model.add_var(CONTINUOUS, 0.0, 2.0 * cmax, f"avg_far_{i}")
        nb = neighbors[i]
        rest = [k for k in range(n) if k != i and k not in nb]
        model.add_lin([(1.0, near)] + [(-1.0 / len(nb), avg[k]) for k in nb],
                      "=", 0.0, f"near_def_{i}")
        model.add_lin([(1.0, far)] + [(-1.0 / len(rest), avg[k]) for k in rest],
                      "=", 0.0, f"far_def_{i}")
        res = embed_predictor(model, pred, [avg[i], near, far], opts=opts,
                              prefix=f"eff{i}")
        records.append(_embed_record(model, f"eff{i}", recipe.predictor_kind,
                                     res, opts))
        obj_y.append(res.output_vars[0])
    e = model.add_var(CONTINUOUS, -INF, INF, "min_efficiency")
    for i, y in enumerate(obj_y):
        model.add_lin(((1.0, e), (-1.0, y)), "<=", 0.0, f"min_eff_{i}")
    model.set_objective("max", ((1.0, e),))
    return model, records


_GENERATORS = {
    "adversarial": _gen_adversarial,
    "auto": _gen_auto,
    "city": _gen_city,
    "function": _gen_function,
    "palatable": _gen_palatable,
    "tree": _gen_tree,
    "water": _gen_water,
    "wine": _gen_wine,
    "workload": _gen_workload,
}


def generate_instance(recipe: InstanceRecipe):
    """Build the model for a recipe; returns (model, manifest dict)."""
    rng = np.random.default_rng([recipe.data_seed, FAMILIES.index(recipe.family)])
    model, records = _GENERATORS[recipe.family](recipe, rng)
    manifest = {
        "name": instance_name(recipe),
        "recipe": {
            "family": recipe.family,
            "problem_params": list(recipe.problem_params),
            "predictor_kind": recipe.predictor_kind,
            "predictor_params": list(recipe.predictor_params),
            "framework": recipe.framework,
            "data_seed": recipe.data_seed,
            "train_seed": recipe.train_seed,
        },
        "counts": model.stats(),
        "embeddings": records,
    }
    return model, manifest


def write_instance(recipe: InstanceRecipe, out_dir):
    """Write <name>.mps and <name>.json; returns both paths."""
    model, manifest = generate_instance(recipe)
    name = instance_name(recipe)
    mps_path = os.path.join(out_dir, name)
    json_path = os.path.join(out_dir, name[:-4] + ".json")
    with open(mps_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_mps(model))
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return mps_path, json_path
