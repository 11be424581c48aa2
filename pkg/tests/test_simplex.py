import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surromip.mip import CONTINUOUS, INTEGER, MipModel
from surromip.solver import simplex_solve, solve_lp_arrays


def vertex_oracle(A, senses, rhs, lb, ub, c, maximize):
    """Brute-force LP oracle: enumerate vertices of the bounded polytope.

    Stacks the rows with the bound planes, tries every choice of n planes,
    solves the square system, and keeps feasible intersection points.  Only
    valid when the optimum sits at a vertex, so all bounds must be finite.
    """
    A = np.asarray(A, float)
    rhs = np.asarray(rhs, float)
    m, n = A.shape
    planes = []
    for i in range(m):
        planes.append((A[i], rhs[i]))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        planes.append((e, lb[j]))
        planes.append((e, ub[j]))
    best = None
    for combo in itertools.combinations(range(len(planes)), n):
        M = np.array([planes[i][0] for i in combo])
        v = np.array([planes[i][1] for i in combo])
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, v)
        if np.any(x < np.asarray(lb) - 1e-8) or np.any(x > np.asarray(ub) + 1e-8):
            continue
        act = A @ x
        ok = True
        for i, s in enumerate(senses):
            r = act[i] - rhs[i]
            if s == "<=" and r > 1e-8:
                ok = False
            elif s == ">=" and r < -1e-8:
                ok = False
            elif s == "=" and abs(r) > 1e-8:
                ok = False
        if not ok:
            continue
        obj = float(np.dot(c, x))
        if best is None or (obj > best if maximize else obj < best):
            best = obj
    return best


def test_small_max_lp():
    res = solve_lp_arrays([[1.0, 2.0], [1.0, 0.0]], ["<=", "<="], [4.0, 3.0],
                          [0.0, 0.0], [math.inf, math.inf], [1.0, 1.0],
                          maximize=True)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(3.5, abs=1e-9)
    assert np.allclose(res.x, [3.0, 0.5], atol=1e-9)


def test_infeasible_lp():
    res = solve_lp_arrays([[1.0], [1.0]], [">=", "<="], [1.0, 0.0],
                          [-10.0], [10.0], [0.0])
    assert res.status == "infeasible"


def test_unbounded_lp():
    res = solve_lp_arrays(np.zeros((0, 1)), [], [], [-math.inf], [math.inf],
                          [1.0], maximize=True)
    assert res.status == "unbounded"


def test_equality_rows():
    # x + y = 1, minimize x with y <= 0.3
    res = solve_lp_arrays([[1.0, 1.0]], ["="], [1.0], [0.0, 0.0], [1.0, 0.3],
                          [1.0, 0.0])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(0.7, abs=1e-9)


def test_degenerate_lp_terminates():
    # many redundant rows through one vertex; Bland fallback must not cycle
    A = [[1.0, 1.0], [2.0, 2.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]
    senses = ["<="] * 5
    rhs = [1.0, 2.0, 1.0, 1.0, 1.0]
    res = solve_lp_arrays(A, senses, rhs, [0.0, 0.0], [5.0, 5.0], [-1.0, -1.0])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(-1.0, abs=1e-8)


def random_lp(seed, n=None, m=None):
    r = np.random.default_rng(seed)
    n = n or int(r.integers(2, 5))
    m = m or int(r.integers(2, 7))
    A = r.uniform(-2, 2, (m, n))
    senses = [("<=", ">=", "=")[int(r.integers(0, 3 if m > n else 2))]
              for _ in range(m)]
    lb = r.uniform(-3, -1, n)
    ub = r.uniform(1, 3, n)
    # anchor the rhs on an interior point so most instances are feasible
    x0 = r.uniform(lb, ub)
    act = A @ x0
    rhs = np.empty(m)
    for i, s in enumerate(senses):
        if s == "<=":
            rhs[i] = act[i] + r.uniform(0.0, 2.0)
        elif s == ">=":
            rhs[i] = act[i] - r.uniform(0.0, 2.0)
        else:
            rhs[i] = act[i]
    c = r.uniform(-1, 1, n)
    maximize = bool(r.integers(0, 2))
    return A, senses, rhs, lb, ub, c, maximize


@pytest.mark.parametrize("seed", range(40))
def test_random_lps_match_vertex_enumeration(seed):
    A, senses, rhs, lb, ub, c, maximize = random_lp(seed)
    want = vertex_oracle(A, senses, rhs, lb, ub, c, maximize)
    res = solve_lp_arrays(A, senses, rhs, lb, ub, c, maximize=maximize)
    assert want is not None and res.status == "optimal"
    assert res.objective == pytest.approx(want, abs=1e-7)
    # returned point is primal feasible at tolerance
    assert np.all(res.x >= lb - 1e-9) and np.all(res.x <= ub + 1e-9)
    act = np.asarray(A) @ res.x
    for i, s in enumerate(senses):
        r = act[i] - rhs[i]
        assert (s == "<=" and r <= 1e-9) or (s == ">=" and r >= -1e-9) \
            or (s == "=" and abs(r) <= 1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**9))
def test_random_infeasible_lps(seed):
    # push an equality row outside the box; must never report optimal
    r = np.random.default_rng(seed)
    n = int(r.integers(2, 4))
    lb, ub = np.zeros(n), np.ones(n)
    row = np.abs(r.uniform(0.1, 1.0, n))
    rhs = float(row @ ub + 1.0)
    res = solve_lp_arrays([row], ["="], [rhs], lb, ub, r.uniform(-1, 1, n))
    assert res.status == "infeasible"


def test_simplex_solve_model_api():
    m = MipModel()
    x = m.add_var(CONTINUOUS, 0.0, math.inf, "x")
    y = m.add_var(CONTINUOUS, 0.0, math.inf, "y")
    m.add_lin(((1.0, x), (2.0, y)), "<=", 4.0, "r1")
    m.add_lin(((1.0, x),), "<=", 3.0, "r2")
    m.set_objective("max", ((1.0, x), (1.0, y)), 0.0)
    res = simplex_solve(m)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(3.5, abs=1e-9)
    assert res.assignment[x] == pytest.approx(3.0)
    assert res.assignment[y] == pytest.approx(0.5)


def test_simplex_solve_reports_unbounded():
    m = MipModel()
    x = m.add_var(CONTINUOUS, -math.inf, math.inf, "x")
    m.set_objective("max", ((1.0, x),), 0.0)
    assert simplex_solve(m).status == "unbounded_relaxation"


def test_simplex_solve_relaxes_integrality():
    m = MipModel()
    x = m.add_var(INTEGER, 0.0, 10.0, "x")
    m.add_lin(((2.0, x),), "<=", 5.0, "r")
    m.set_objective("max", ((1.0, x),), 0.0)
    res = simplex_solve(m)
    assert res.objective == pytest.approx(2.5)
