"""Two-phase driver around the simplex kernel, plus the model-level API."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..mip import MipModel
from . import kernel
from .kernel import AT_LB, AT_UB, BASIC, FREE, ITER_LIMIT, OPTIMAL, SINGULAR, UNBOUNDED

__all__ = ["LpResult", "solve_lp_arrays", "simplex_solve", "SolveResult", "SimplexFailure"]

PRIMAL_TOL = 1e-9


class SimplexFailure(RuntimeError):
    """Numerically singular basis; reported rather than a wrong answer."""


@dataclass
class LpResult:
    status: str  # optimal | infeasible | unbounded | failed
    objective: float
    x: np.ndarray
    iterations: int


@dataclass
class SolveResult:
    status: str
    objective: float
    assignment: dict
    node_count: int = 0
    simplex_iterations: int = 0


def _trivial_box_lp(c, lb, ub, maximize):
    """LP with no rows: each variable sits at whichever bound helps."""
    n = len(c)
    x = np.zeros(n)
    cc = -c if maximize else c
    for j in range(n):
        if cc[j] > 0:
            if lb[j] == -np.inf:
                return LpResult("unbounded", np.nan, x, 0)
            x[j] = lb[j]
        elif cc[j] < 0:
            if ub[j] == np.inf:
                return LpResult("unbounded", np.nan, x, 0)
            x[j] = ub[j]
        else:
            x[j] = min(max(0.0, lb[j]), ub[j])
    obj = float(c @ x)
    return LpResult("optimal", obj, x, 0)


def solve_lp_arrays(A, senses, rhs, lb, ub, c, maximize=False):
    """Solve min/max c'x  s.t.  A x (sense) rhs,  lb <= x <= ub.

    A is (m, n) dense; senses is a sequence over {"<=", "=", ">="}.
    """
    A = np.asarray(A, dtype=float).reshape(len(senses), -1) if len(senses) else np.zeros((0, len(c)))
    rhs = np.asarray(rhs, dtype=float)
    lb = np.asarray(lb, dtype=float).copy()
    ub = np.asarray(ub, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = A.shape

    if np.any(lb > ub + 1e-12):
        return LpResult("infeasible", np.nan, np.zeros(n), 0)
    if m == 0:
        return _trivial_box_lp(c, lb, ub, maximize)

    # columns: structural | slack | artificial;  A x + s = b, a patches phase 1
    ncols = n + m + m
    Afull = np.zeros((m, ncols))
    Afull[:, :n] = A
    slo = np.empty(m)
    shi = np.empty(m)
    for i, sense in enumerate(senses):
        Afull[i, n + i] = 1.0
        if sense == "<=":
            slo[i], shi[i] = 0.0, np.inf
        elif sense == ">=":
            slo[i], shi[i] = -np.inf, 0.0
        else:
            slo[i], shi[i] = 0.0, 0.0

    lo = np.concatenate([lb, slo, np.zeros(m)])
    hi = np.concatenate([ub, shi, np.full(m, np.inf)])

    xval = np.zeros(ncols)
    vstat = np.full(ncols, AT_LB, dtype=np.int64)
    for j in range(n + m):
        if lo[j] > -np.inf:
            vstat[j] = AT_LB
            xval[j] = lo[j]
        elif hi[j] < np.inf:
            vstat[j] = AT_UB
            xval[j] = hi[j]
        else:
            vstat[j] = FREE
            xval[j] = 0.0

    resid = rhs - Afull[:, : n + m] @ xval[: n + m]
    basis = np.arange(n + m, ncols, dtype=np.int64)
    for i in range(m):
        Afull[i, n + m + i] = 1.0 if resid[i] >= 0 else -1.0
        xval[n + m + i] = abs(resid[i])
        vstat[n + m + i] = BASIC

    cmax = -c if maximize else c
    c1 = np.zeros(ncols)
    c1[n + m:] = 1.0
    c2 = np.zeros(ncols)
    c2[:n] = cmax

    max_iter = 20000 + 50 * ncols
    bland_start = 4 * (m + ncols)

    code, it1 = kernel.simplex_phase(
        Afull, rhs, c1, lo, hi, basis, vstat, xval, max_iter, bland_start
    )
    if code in (ITER_LIMIT, SINGULAR):
        raise SimplexFailure(f"phase 1 failed with code {code}")
    if float(c1 @ xval) > 1e-9:
        return LpResult("infeasible", np.nan, xval[:n].copy(), it1)

    hi[n + m:] = 0.0  # artificials pinned for phase 2
    xval[n + m:] = 0.0
    code, it2 = kernel.simplex_phase(
        Afull, rhs, c2, lo, hi, basis, vstat, xval, max_iter, bland_start
    )
    if code in (ITER_LIMIT, SINGULAR):
        raise SimplexFailure(f"phase 2 failed with code {code}")
    if code == UNBOUNDED:
        return LpResult("unbounded", np.nan, xval[:n].copy(), it1 + it2)

    x = np.clip(xval[:n], lb, ub)
    obj = float(c @ x)
    return LpResult("optimal", obj, x, it1 + it2)


def _model_arrays(model: MipModel):
    n = len(model.vars)
    lb = np.array([v.lb for v in model.vars])
    ub = np.array([v.ub for v in model.vars])
    m = len(model.lin_cons)
    A = np.zeros((m, n))
    senses = []
    rhs = np.zeros(m)
    for i, cons in enumerate(model.lin_cons):
        for coef, vid in cons.terms:
            A[i, vid] += coef
        senses.append(cons.sense)
        rhs[i] = cons.rhs
    sense, terms, const = model.objective
    c = np.zeros(n)
    for coef, vid in terms:
        c[vid] += coef
    return A, senses, rhs, lb, ub, c, const, sense == "max"


def simplex_solve(model: MipModel) -> SolveResult:
    """LP solve of the linear part of a model (integrality ignored)."""
    if model.ind_cons or model.sos1_cons:
        raise ValueError("simplex_solve expects a pure LP (no indicators / SOS)")
    A, senses, rhs, lb, ub, c, const, maximize = _model_arrays(model)
    res = solve_lp_arrays(A, senses, rhs, lb, ub, c, maximize)
    status = {
        "optimal": "optimal",
        "infeasible": "infeasible",
        "unbounded": "unbounded_relaxation",
    }[res.status]
    obj = res.objective + const if status == "optimal" else float("nan")
    assignment = {i: float(res.x[i]) for i in range(len(model.vars))}
    return SolveResult(status, obj, assignment, 0, res.iterations)
