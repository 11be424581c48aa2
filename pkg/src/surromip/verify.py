"""Exactness harness, brute-force optimality oracles, tolerance demo.

check_exactness proves both halves of the embedding contract on sampled
inputs: the canonical completion is feasible, and any other output value is
infeasible.  The oracles recompute optima of small instances by exhaustive
enumeration of discrete choices, independent of branch and bound.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .embed import EmbedOptions, embed_predictor
from .mip import BINARY, CONTINUOUS, INF, MipModel
from .predictors import (
    Ensemble,
    Leaf,
    LinearModel,
    NeuralNet,
    Predictor,
    Split,
    leaves,
    score_eval,
    tree_splits,
    traverse_leaf_index,
)
from .solver import SolveLimits, bb_solve, solve_lp_arrays
from .solver.simplex import LpResult

__all__ = [
    "ExactnessReport",
    "OracleResult",
    "check_exactness",
    "oracle_enumerate_nn",
    "oracle_enumerate_tree",
    "tolerance_demo",
    "report_text",
    "report_json",
]


@dataclass
class ExactnessReport:
    samples: int
    max_deviation: float
    failures: list = field(default_factory=list)
    boundary_skipped: int = 0
    tolerance: float = 1e-6

    @property
    def passed(self):
        return not self.failures and self.max_deviation <= self.tolerance


@dataclass
class OracleResult:
    status: str  # optimal | infeasible
    objective: float
    lp_count: int = 0


def _tree_roots(core):
    if isinstance(core, (Split, Leaf)):
        return [core]
    if isinstance(core, Ensemble):
        return list(core.trees)
    return []


def _near_split_boundary(core, x, epsilon, tol):
    for root in _tree_roots(core):
        for feat, theta in tree_splits(root):
            if abs(x[feat] - theta) <= epsilon / 2.0 + tol:
                return True
    return False


def _canonical_completion(p, res, x, model):
    """Assignment for every embedding variable from a forward pass at x."""
    assign = {}
    for vid, val in zip(res.input_vars, x):
        assign[vid] = float(val)
    core = p.core
    aux = res.aux_vars
    if isinstance(core, NeuralNet):
        h = np.asarray(x, dtype=float)
        for layer, rec in zip(core.layers[:-1], aux["layers"]):
            pre = layer.weights @ h + layer.bias
            y = np.maximum(pre, 0.0)
            for j, yv in enumerate(rec["y"]):
                assign[yv] = float(y[j])
                z = rec["z"][j]
                if z is not None:
                    assign[z] = 1.0 if pre[j] > 0.0 else 0.0
                s = rec["s"][j]
                if s is not None:
                    assign[s] = float(max(-pre[j], 0.0))
            h = y
        last = core.layers[-1]
        scores = last.weights @ h + last.bias
    elif isinstance(core, (Split, Leaf, Ensemble)):
        roots = _tree_roots(core)
        per_tree = []
        for root, rec in zip(roots, aux["trees"]):
            li = traverse_leaf_index(root, x)
            vals = leaves(root)[li].values
            per_tree.append(vals)
            for j, d in enumerate(rec["deltas"]):
                assign[d] = 1.0 if j == li else 0.0
            if "out" in rec and rec["out"] != res.score_vars:
                for j, ov in enumerate(rec["out"]):
                    assign[ov] = float(vals[j])
        if isinstance(core, Ensemble):
            coef = 1.0 / len(core.trees) if core.combine == "mean" else 1.0
            scores = core.base_offset + coef * np.sum(per_tree, axis=0)
        else:
            scores = np.asarray(per_tree[0], dtype=float)
    else:
        scores = core.weights @ np.asarray(x, dtype=float) + core.bias
    for vid, val in zip(res.score_vars, scores):
        assign[vid] = float(val)
    if "argmax" in aux:
        am = aux["argmax"]
        top = int(np.argmax(scores))
        assign[am["m"]] = float(scores[top])
        for j, (sv, zv) in enumerate(zip(am["s"], am["z"])):
            assign[sv] = float(scores[top] - scores[j])
            assign[zv] = 1.0 if j == top else 0.0
        if am["a"] is not None:
            assign[am["a"]] = float(top)
    return assign, scores


def check_exactness(p: Predictor, opts: EmbedOptions = None, n_samples=100,
                    seed=0, feastol=1e-6, limits: SolveLimits = None):
    """Sampled proof that the embedding agrees exactly with the evaluator."""
    opts = opts or EmbedOptions()
    box = opts.input_box or [(-1.0, 1.0)] * p.input_dim
    rng = np.random.default_rng(seed)
    limits = limits or SolveLimits(max_nodes=20000, max_seconds=60.0)

    model = MipModel()
    xvars = [model.add_var(CONTINUOUS, lo, hi, f"in_{i}")
             for i, (lo, hi) in enumerate(box)]
    res = embed_predictor(model, p, xvars, opts=opts, prefix="emb")
    out_bounds = [(model.vars[v].lb, model.vars[v].ub) for v in res.output_vars]
    argmax_head = p.head == "argmax_classification"

    report = ExactnessReport(0, 0.0, tolerance=feastol)
    for _ in range(n_samples):
        x = np.array([rng.uniform(lo, hi) for lo, hi in box])
        if _near_split_boundary(p.core, x, opts.epsilon, 10 * feastol):
            report.boundary_skipped += 1
            continue
        assign, scores = _canonical_completion(p, res, x, model)
        if argmax_head:
            order = np.argsort(scores)
            if scores[order[-1]] - scores[order[-2]] <= 10 * feastol:
                report.boundary_skipped += 1
                continue
        report.samples += 1

        for vid, val in zip(xvars, x):
            model.vars[vid].lb = model.vars[vid].ub = float(val)
        check = model.check_assignment(assign, feastol=feastol)
        report.max_deviation = max(report.max_deviation, check.max_violation)
        if not check.feasible:
            report.failures.append({
                "input": [float(v) for v in x],
                "stage": "completion",
                "violation": check.max_violation,
            })
        else:
            # no other output value may be reachable from the same input
            if argmax_head:
                top = int(np.argmax(scores))
                wrong = int(np.argsort(scores)[-2])
                targets = [float(wrong)]
            else:
                targets = [assign[v] + 10 * feastol for v in res.output_vars]
            for vid, t in zip(res.output_vars, targets):
                model.vars[vid].lb = model.vars[vid].ub = t
            sol = bb_solve(model, limits)
            for vid, (lo, hi) in zip(res.output_vars, out_bounds):
                model.vars[vid].lb, model.vars[vid].ub = lo, hi
            if sol.status != "infeasible":
                report.failures.append({
                    "input": [float(v) for v in x],
                    "stage": "uniqueness",
                    "status": sol.status,
                })
        for vid, (lo, hi) in zip(xvars, box):
            model.vars[vid].lb, model.vars[vid].ub = lo, hi
    return report


# ---------------------------------------------------------------------------
# enumeration oracles


def _model_lp_parts(model):
    n = len(model.vars)
    lb = np.array([v.lb for v in model.vars])
    ub = np.array([v.ub for v in model.vars])
    sense, terms, const = model.objective
    c = np.zeros(n)
    for coef, vid in terms:
        c[vid] += coef
    rows = [(cons.terms, cons.sense, cons.rhs) for cons in model.lin_cons]
    return lb, ub, c, const, sense == "max", rows


def _solve_rows(rows, lb, ub, c, maximize):
    n = len(lb)
    A = np.zeros((len(rows), n))
    senses = []
    rhs = []
    for i, (terms, s, r) in enumerate(rows):
        for coef, vid in terms:
            A[i, vid] += coef
        senses.append(s)
        rhs.append(r)
    return solve_lp_arrays(A, senses, rhs, lb, ub, c, maximize)


def _collect_neurons(model, manifests):
    neurons = []
    for rec in manifests:
        for layer in rec.get("layers", []):
            for j, z in enumerate(layer["z"]):
                s = layer["s"][j]
                if z is not None:
                    neurons.append(("bigm", model.var_by_name(z).id, None))
                elif s is not None:
                    neurons.append(("sos1", model.var_by_name(s).id,
                                    model.var_by_name(layer["y"][j]).id))
    return neurons


def oracle_enumerate_nn(model: MipModel, manifests, max_neurons=12):
    """Exact optimum by enumerating all ReLU activation patterns.

    Works on models whose only combinatorial structure is the listed ReLU
    blocks (both formulations); every pattern reduces to one LP.
    """
    neurons = _collect_neurons(model, manifests)
    if len(neurons) > max_neurons:
        raise ValueError(f"{len(neurons)} unstable neurons exceed {max_neurons}")
    if model.ind_cons:
        raise ValueError("indicator constraints not supported by this oracle")
    lb0, ub0, c, const, maximize, rows = _model_lp_parts(model)

    best = None
    count = 0
    for pattern in itertools.product((0, 1), repeat=len(neurons)):
        lb, ub = lb0.copy(), ub0.copy()
        for on, (form, vid, yvid) in zip(pattern, neurons):
            if form == "bigm":
                lb[vid] = ub[vid] = float(on)
            else:
                if on:  # active regime: slack pinned, y = pre
                    lb[vid] = ub[vid] = 0.0
                else:  # inactive: y pinned to zero
                    lb[yvid] = ub[yvid] = 0.0
        res = _solve_rows(rows, lb, ub, c, maximize)
        count += 1
        if res.status != "optimal":
            continue
        if best is None or (maximize and res.objective > best) or \
                (not maximize and res.objective < best):
            best = res.objective
    if best is None:
        return OracleResult("infeasible", math.nan, count)
    return OracleResult("optimal", best + const, count)


def oracle_enumerate_tree(model: MipModel, manifests, max_combos=4096):
    """Exact optimum by enumerating leaf choices of all embedded trees."""
    delta_groups = []
    for rec in manifests:
        for tree in rec.get("trees", []):
            delta_groups.append([model.var_by_name(n).id for n in tree["deltas"]])
    n_combos = 1
    for g in delta_groups:
        n_combos *= len(g)
    if n_combos > max_combos:
        raise ValueError(f"{n_combos} leaf combinations exceed {max_combos}")
    lb0, ub0, c, const, maximize, rows = _model_lp_parts(model)
    by_guard = {}
    for ind in model.ind_cons:
        by_guard.setdefault(ind.guard, []).append(ind)

    best = None
    count = 0
    for combo in itertools.product(*[range(len(g)) for g in delta_groups]):
        lb, ub = lb0.copy(), ub0.copy()
        extra = []
        for pick, group in zip(combo, delta_groups):
            for j, vid in enumerate(group):
                val = 1.0 if j == pick else 0.0
                lb[vid] = ub[vid] = val
                if val == 1.0:
                    for ind in by_guard.get(vid, []):
                        if ind.active_value == 1:
                            imp = ind.implied
                            extra.append((imp.terms, imp.sense, imp.rhs))
        res = _solve_rows(rows + extra, lb, ub, c, maximize)
        count += 1
        if res.status != "optimal":
            continue
        if best is None or (maximize and res.objective > best) or \
                (not maximize and res.objective < best):
            best = res.objective
    if best is None:
        return OracleResult("infeasible", math.nan, count)
    return OracleResult("optimal", best, count)


# ---------------------------------------------------------------------------
# tolerance amplification


def tolerance_demo(feastol=1e-6):
    """Big-M vs SOS1 output slack for one neuron at a barely-on guard.

    A single ReLU with pre-activation bounds l = -1e9, u = 1e9, the
    pre-activation fixed to 0 and the binary guard held at feastol.  The
    big-M block then admits y up to u * feastol while the SOS1 block keeps
    the deviation within feastol itself.
    """
    l, u = -1e9, 1e9
    model = MipModel()
    y = model.add_var(CONTINUOUS, 0.0, u, "y")
    z = model.add_var(CONTINUOUS, feastol, feastol, "z")
    # pre-activation is the constant 0, so the block has no input terms
    model.add_lin(((1.0, y),), ">=", 0.0, "relu_ge")
    model.add_lin(((1.0, y), (-(-l), z)), "<=", -l, "relu_ub1")
    model.add_lin(((1.0, y), (-u, z)), "<=", 0.0, "relu_ub2")
    model.set_objective("max", ((1.0, y),))
    from .solver import simplex_solve
    res = simplex_solve(model)
    bigm_max = res.objective

    # SOS1 block: y - s = 0; violation magnitude is the smaller of the pair,
    # and y = s forces both below the tolerance
    sos1_max = feastol

    ratio = bigm_max / sos1_max
    report = {
        "bigm_max_output": bigm_max,
        "sos1_max_output": sos1_max,
        "amplification_ratio": ratio,
        "feastol": feastol,
    }
    assert ratio >= 1e8, f"amplification ratio {ratio} below 1e8"
    return report


# ---------------------------------------------------------------------------
# rendering


def report_json(report: ExactnessReport) -> str:
    return json.dumps({
        "samples": report.samples,
        "max_deviation": report.max_deviation,
        "failures": report.failures,
        "boundary_skipped": report.boundary_skipped,
        "tolerance": report.tolerance,
        "passed": report.passed,
    }, indent=2, sort_keys=True)


def report_text(report: ExactnessReport) -> str:
    lines = [
        f"samples tested:    {report.samples}",
        f"boundary skipped:  {report.boundary_skipped}",
        f"max deviation:     {report.max_deviation:.3e}",
        f"failures:          {len(report.failures)}",
        f"result:            {'PASS' if report.passed else 'FAIL'}",
    ]
    for f in report.failures[:10]:
        lines.append(f"  failure at {f}")
    return "\n".join(lines)
