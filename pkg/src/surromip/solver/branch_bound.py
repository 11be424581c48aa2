"""Branch-and-bound over the full MIP semantics.

Node LPs are the linear relaxation with indicator constraints converted to
big-M rows whenever interval arithmetic over the node's bounds yields a
finite constant; otherwise the indicator is resolved by branching.  SOS1
constraints are enforced by branching only.  Branching priority per node:
most fractional integer, then most violated SOS1, then an unresolved
indicator.  Node selection is best bound, FIFO on ties.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from ..mip import BINARY, INTEGER, MipModel
from .simplex import SolveResult, solve_lp_arrays

__all__ = ["SolveLimits", "bb_solve"]


@dataclass
class SolveLimits:
    max_nodes: int = 200_000
    max_seconds: float = 600.0
    abs_gap: float = 1e-6

    def __post_init__(self):
        if self.max_nodes <= 0 or self.max_seconds <= 0 or self.abs_gap <= 0:
            raise ValueError("solve limits must be positive")


@dataclass
class _Node:
    lb: np.ndarray
    ub: np.ndarray
    extra: tuple  # rows added by indicator branching: ((terms, sense, rhs), ...)
    resolved: frozenset  # indicator indices settled by branching
    bound: float


def _activity_interval(terms, lb, ub):
    lo = hi = 0.0
    for coef, vid in terms:
        a, b = coef * lb[vid], coef * ub[vid]
        lo += min(a, b)
        hi += max(a, b)
    return lo, hi


def _indicator_rows(model, node, feastol):
    """Rows for the node LP from indicators; returns (rows, unresolved ids)."""
    rows = []
    unresolved = []
    for idx, ind in enumerate(model.ind_cons):
        if idx in node.resolved:
            continue
        g = ind.guard
        glb, gub = node.lb[g], node.ub[g]
        imp = ind.implied
        if gub - glb < 0.5:  # guard fixed by bounds
            if abs(glb - ind.active_value) < 0.5:
                rows.append((imp.terms, imp.sense, imp.rhs))
            continue
        lo, hi = _activity_interval(imp.terms, node.lb, node.ub)
        if imp.sense == "<=":
            slack = hi - imp.rhs
            if slack <= 0:
                continue  # vacuous
            if math.isfinite(slack):
                if ind.active_value == 1:
                    rows.append((imp.terms + ((slack, g),), "<=", imp.rhs + slack))
                else:
                    rows.append((imp.terms + ((-slack, g),), "<=", imp.rhs))
                continue
        else:  # ">="
            slack = imp.rhs - lo
            if slack <= 0:
                continue
            if math.isfinite(slack):
                if ind.active_value == 1:
                    rows.append((imp.terms + ((-slack, g),), ">=", imp.rhs - slack))
                else:
                    rows.append((imp.terms + ((slack, g),), ">=", imp.rhs))
                continue
        unresolved.append(idx)
    return rows, unresolved


_PROP_EPS = 1e-9


def _propagate(rows, lb, ub, is_int, max_passes=10):
    """Activity-based domain propagation; mutates lb/ub.

    Returns False when some domain becomes empty.  Derived bounds carry a
    small slack so rounding noise never cuts off feasible points.
    """
    for _ in range(max_passes):
        changed = False
        for terms, sense, rhs in rows:
            if not terms:
                continue
            lo = hi = 0.0
            n_lo_inf = n_hi_inf = 0
            contrib = []
            for coef, vid in terms:
                a, b = coef * lb[vid], coef * ub[vid]
                cl, ch = (a, b) if a <= b else (b, a)
                contrib.append((coef, vid, cl, ch))
                if cl == -math.inf:
                    n_lo_inf += 1
                else:
                    lo += cl
                if ch == math.inf:
                    n_hi_inf += 1
                else:
                    hi += ch
            for coef, vid, cl, ch in contrib:
                # activity of the row excluding this term
                if sense in ("<=", "="):
                    if n_lo_inf == 0:
                        rest = lo - cl
                    elif n_lo_inf == 1 and cl == -math.inf:
                        rest = lo
                    else:
                        rest = -math.inf
                    if rest > -math.inf:
                        cap = rhs - rest + _PROP_EPS
                        if coef > 0:
                            new = cap / coef
                            if new < ub[vid] - _PROP_EPS:
                                if is_int[vid]:
                                    new = math.floor(new + 1e-6)
                                ub[vid] = new
                                changed = True
                        else:
                            new = cap / coef
                            if new > lb[vid] + _PROP_EPS:
                                if is_int[vid]:
                                    new = math.ceil(new - 1e-6)
                                lb[vid] = new
                                changed = True
                if sense in (">=", "="):
                    if n_hi_inf == 0:
                        rest = hi - ch
                    elif n_hi_inf == 1 and ch == math.inf:
                        rest = hi
                    else:
                        rest = math.inf
                    if rest < math.inf:
                        cap = rhs - rest - _PROP_EPS
                        if coef > 0:
                            new = cap / coef
                            if new > lb[vid] + _PROP_EPS:
                                if is_int[vid]:
                                    new = math.ceil(new - 1e-6)
                                lb[vid] = new
                                changed = True
                        else:
                            new = cap / coef
                            if new < ub[vid] - _PROP_EPS:
                                if is_int[vid]:
                                    new = math.floor(new + 1e-6)
                                ub[vid] = new
                                changed = True
                if lb[vid] > ub[vid] + 1e-7:
                    return False
        if not changed:
            break
    return True


def _lin_violation(terms, sense, rhs, x):
    lhs = sum(c * x[v] for c, v in terms)
    if sense == "<=":
        return max(0.0, lhs - rhs)
    if sense == ">=":
        return max(0.0, rhs - lhs)
    return abs(lhs - rhs)


def bb_solve(model: MipModel, limits: SolveLimits = None) -> SolveResult:
    """Global solve of a MipModel; deterministic for fixed model + limits."""
    limits = limits or SolveLimits()
    t0 = time.perf_counter()
    n = len(model.vars)
    lb0 = np.array([v.lb for v in model.vars])
    ub0 = np.array([v.ub for v in model.vars])
    int_ids = [v.id for v in model.vars if v.kind in (BINARY, INTEGER)]

    m0 = len(model.lin_cons)
    A0 = np.zeros((m0, n))
    senses0 = []
    rhs0 = []
    for i, cons in enumerate(model.lin_cons):
        for coef, vid in cons.terms:
            A0[i, vid] += coef
        senses0.append(cons.sense)
        rhs0.append(cons.rhs)

    obj_sense, obj_terms, obj_const = model.objective
    c = np.zeros(n)
    for coef, vid in obj_terms:
        c[vid] += coef
    sign = -1.0 if obj_sense == "max" else 1.0
    cmin = sign * c  # internal minimisation

    feastol = 1e-6
    inttol = 1e-6
    gap = limits.abs_gap
    base_rows = [(cons.terms, cons.sense, cons.rhs) for cons in model.lin_cons]
    is_int = np.zeros(n, dtype=bool)
    is_int[int_ids] = True

    best_obj = math.inf  # internal (minimisation, without constant)
    best_x = None
    node_count = 0
    lp_iters = 0
    seq = 0
    heap = []
    root = _Node(lb0.copy(), ub0.copy(), (), frozenset(), -math.inf)
    heapq.heappush(heap, (-math.inf, seq, root))
    hit_limit = None

    def finish(status_if_done):
        if best_x is not None:
            ext_obj = sign * best_obj + obj_const
            assignment = {}
            for v in model.vars:
                val = float(best_x[v.id])
                if v.kind in (BINARY, INTEGER):
                    val = float(round(val))
                assignment[v.id] = min(max(val, v.lb), v.ub)
            status = "optimal" if status_if_done == "done" else status_if_done
            return SolveResult(status, ext_obj, assignment, node_count, lp_iters)
        if status_if_done == "done":
            return SolveResult("infeasible", math.nan, {}, node_count, lp_iters)
        return SolveResult(status_if_done, math.nan, {}, node_count, lp_iters)

    while heap:
        if node_count >= limits.max_nodes:
            return finish("node_limit")
        if time.perf_counter() - t0 > limits.max_seconds:
            return finish("time_limit")
        bound, _, node = heapq.heappop(heap)
        if bound >= best_obj - gap:
            continue

        node_count += 1
        if not _propagate(base_rows + list(node.extra), node.lb, node.ub, is_int):
            continue

        ind_rows, unresolved = _indicator_rows(model, node, feastol)
        extra = list(node.extra) + ind_rows
        if extra:
            Aex = np.zeros((len(extra), n))
            for i, (terms, _, _) in enumerate(extra):
                for coef, vid in terms:
                    Aex[i, vid] += coef
            A = np.vstack([A0, Aex])
            senses = senses0 + [s for _, s, _ in extra]
            rhs = rhs0 + [r for _, _, r in extra]
        else:
            A, senses, rhs = A0, senses0, rhs0

        res = solve_lp_arrays(A, senses, rhs, node.lb, node.ub, cmin)
        lp_iters += res.iterations
        if res.status == "infeasible":
            continue
        if res.status == "unbounded":
            return SolveResult("unbounded_relaxation", math.nan, {}, node_count, lp_iters)
        if res.objective >= best_obj - gap:
            continue
        x = res.x

        def push(child_lb, child_ub, child_extra, child_resolved):
            nonlocal seq
            seq += 1
            child = _Node(child_lb, child_ub, child_extra, child_resolved, res.objective)
            heapq.heappush(heap, (res.objective, seq, child))

        # 1. integrality
        frac_var, frac_score = -1, inttol
        for vid in int_ids:
            f = x[vid] - math.floor(x[vid])
            score = min(f, 1.0 - f)
            if score > frac_score + 1e-12:
                frac_var, frac_score = vid, score
        if frac_var >= 0:
            down_ub = node.ub.copy()
            down_ub[frac_var] = math.floor(x[frac_var])
            push(node.lb.copy(), down_ub, node.extra, node.resolved)
            up_lb = node.lb.copy()
            up_lb[frac_var] = math.ceil(x[frac_var])
            push(up_lb, node.ub.copy(), node.extra, node.resolved)
            continue

        # 2. SOS1
        sos_pick, sos_score = None, feastol
        for cons in model.sos1_cons:
            mags = sorted((abs(x[v]) for v in cons.members), reverse=True)
            if mags[1] > sos_score + 1e-12:
                sos_pick, sos_score = cons, mags[1]
        if sos_pick is not None:
            # midpoint over members still free at this node so that each
            # child zeroes at least one of the violating members
            free_w = [w for v, w in zip(sos_pick.members, sos_pick.weights)
                      if not (node.lb[v] == 0.0 and node.ub[v] == 0.0)]
            mid = (free_w[0] + free_w[-1]) / 2.0
            left = [v for v, w in zip(sos_pick.members, sos_pick.weights) if w <= mid]
            right = [v for v, w in zip(sos_pick.members, sos_pick.weights) if w > mid]
            for half in (left, right):
                clb, cub = node.lb.copy(), node.ub.copy()
                for v in half:
                    clb[v] = max(clb[v], 0.0)
                    cub[v] = min(cub[v], 0.0)
                push(clb, cub, node.extra, node.resolved)
            continue

        # 3. indicators whose implied constraint is violated at an active guard
        ind_pick = -1
        for idx, ind in enumerate(model.ind_cons):
            if idx in node.resolved:
                continue
            if abs(x[ind.guard] - ind.active_value) <= inttol:
                imp = ind.implied
                if _lin_violation(imp.terms, imp.sense, imp.rhs, x) > feastol / 2:
                    ind_pick = idx
                    break
        if ind_pick >= 0:
            ind = model.ind_cons[ind_pick]
            imp = ind.implied
            clb, cub = node.lb.copy(), node.ub.copy()
            clb[ind.guard] = cub[ind.guard] = float(ind.active_value)
            push(clb, cub,
                 node.extra + ((imp.terms, imp.sense, imp.rhs),),
                 node.resolved | {ind_pick})
            clb, cub = node.lb.copy(), node.ub.copy()
            clb[ind.guard] = cub[ind.guard] = float(1 - ind.active_value)
            push(clb, cub, node.extra, node.resolved | {ind_pick})
            continue

        # feasible for the MIP semantics
        if res.objective < best_obj - 1e-12:
            best_obj = res.objective
            best_x = x.copy()

    return finish("done")
