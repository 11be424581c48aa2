"""Dense bounded-variable primal simplex kernel.

The iteration loop below is the hot path of the whole package (branch and
bound solves one LP per node).  It is written against plain float64 arrays
so the same source compiles under numba; set ``SURROMIP_NO_NUMBA=1`` to run
the pure-numpy interpretation instead (same results, slower).
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["simplex_phase", "USING_NUMBA"]

# variable statuses
AT_LB = 0
AT_UB = 1
BASIC = 2
FREE = 3

# phase return codes
OPTIMAL = 0
UNBOUNDED = 2
ITER_LIMIT = 3
SINGULAR = 4

_PTOL = 1e-10  # pivot / rate threshold
_DTOL = 1e-9  # dual (reduced cost) tolerance


def _simplex_phase(A, b, c, lo, hi, basis, vstat, xval, max_iter, bland_start):
    """Run bounded simplex until optimality; mutates basis/vstat/xval.

    Returns (code, iterations).  Entering rule is Dantzig until
    ``bland_start`` iterations, Bland afterwards; leaving ties always break
    towards the smallest variable id so runs are deterministic.
    """
    m, n_cols = A.shape
    refactor_every = 64
    Binv = np.eye(m)
    it = 0
    since_refactor = refactor_every  # force initial factorisation

    while True:
        if since_refactor >= refactor_every:
            B = np.empty((m, m))
            for i in range(m):
                for r in range(m):
                    B[r, i] = A[r, basis[i]]
            Binv = np.ascontiguousarray(np.linalg.inv(B))
            if not np.all(np.isfinite(Binv)):
                return SINGULAR, it
            xn = xval.copy()
            for i in range(m):
                xn[basis[i]] = 0.0
            xb = Binv @ (b - A @ xn)
            for i in range(m):
                xval[basis[i]] = xb[i]
            since_refactor = 0

        # reduced costs
        y = np.zeros(m)
        for i in range(m):
            f = c[basis[i]]
            if f != 0.0:
                y += f * Binv[i]
        d = c - y @ A

        enter = -1
        enter_dir = 0
        best = _DTOL
        for j in range(n_cols):
            st = vstat[j]
            if st == BASIC:
                continue
            dj = d[j]
            if st == AT_LB and dj < -_DTOL:
                score, dirn = -dj, 1
            elif st == AT_UB and dj > _DTOL:
                score, dirn = dj, -1
            elif st == FREE and (dj < -_DTOL or dj > _DTOL):
                score = abs(dj)
                dirn = 1 if dj < 0 else -1
            else:
                continue
            if it >= bland_start:
                enter, enter_dir = j, dirn
                break
            if score > best:
                best, enter, enter_dir = score, j, dirn
        if enter == -1:
            return OPTIMAL, it

        w = Binv @ A[:, enter].copy()

        # ratio test: entering moves by t*enter_dir >= 0
        limit = np.inf
        if lo[enter] > -np.inf and hi[enter] < np.inf:
            limit = hi[enter] - lo[enter]  # bound-to-bound flip
        leave = -1
        leave_to = AT_LB
        for i in range(m):
            rate = -enter_dir * w[i]
            bi = basis[i]
            if rate > _PTOL:
                if hi[bi] < np.inf:
                    cap = (hi[bi] - xval[bi]) / rate
                    to = AT_UB
                else:
                    continue
            elif rate < -_PTOL:
                if lo[bi] > -np.inf:
                    cap = (lo[bi] - xval[bi]) / rate
                    to = AT_LB
                else:
                    continue
            else:
                continue
            if cap < 0.0:
                cap = 0.0
            if cap < limit - 1e-12:
                limit, leave, leave_to = cap, i, to
            elif cap < limit + 1e-12 and leave >= 0 and bi < basis[leave]:
                leave, leave_to = i, to

        if limit == np.inf:
            return UNBOUNDED, it

        # take the step
        if limit > 0.0:
            xval[enter] += enter_dir * limit
            for i in range(m):
                xval[basis[i]] -= enter_dir * w[i] * limit

        if leave == -1:
            # bound flip, basis unchanged
            vstat[enter] = AT_UB if enter_dir == 1 else AT_LB
            xval[enter] = hi[enter] if enter_dir == 1 else lo[enter]
        else:
            piv = w[leave]
            if piv < _PTOL and piv > -_PTOL:
                if since_refactor == 0:
                    return SINGULAR, it
                since_refactor = refactor_every
                continue
            # eta update of Binv
            Binv[leave, :] /= piv
            for i in range(m):
                if i != leave:
                    f = w[i]
                    if f != 0.0:
                        Binv[i, :] -= f * Binv[leave, :]
            out_var = basis[leave]
            vstat[out_var] = leave_to
            xval[out_var] = hi[out_var] if leave_to == AT_UB else lo[out_var]
            basis[leave] = enter
            vstat[enter] = BASIC
            since_refactor += 1

        it += 1
        if it >= max_iter:
            return ITER_LIMIT, it


USING_NUMBA = False
simplex_phase = _simplex_phase

if os.environ.get("SURROMIP_NO_NUMBA") != "1":
    try:
        import numba

        simplex_phase = numba.njit(cache=True, fastmath=False)(_simplex_phase)
        USING_NUMBA = True
    except ImportError:
        pass
