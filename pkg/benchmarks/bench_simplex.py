"""Compare the compiled simplex kernel against the pure-numpy fallback.

The fallback is selected with SURROMIP_NO_NUMBA=1, which must be set before
surromip is imported; this script therefore re-executes itself once with the
flag to collect the second timing series.

Usage: python benchmarks/bench_simplex.py [--lps 300] [--seed 0]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def make_lp(rng):
    n = int(rng.integers(5, 30))
    m = int(rng.integers(5, 30))
    A = rng.uniform(-2, 2, (m, n))
    senses = [("<=", ">=", "=")[int(rng.integers(0, 3 if m > n else 2))]
              for _ in range(m)]
    lb = rng.uniform(-3, -1, n)
    ub = rng.uniform(1, 3, n)
    x0 = rng.uniform(lb, ub)
    act = A @ x0
    rhs = np.array([
        act[i] + rng.uniform(0, 2) if s == "<=" else
        act[i] - rng.uniform(0, 2) if s == ">=" else act[i]
        for i, s in enumerate(senses)
    ])
    c = rng.uniform(-1, 1, n)
    return A, senses, rhs, lb, ub, c


def run(n_lps, seed):
    from surromip.solver import solve_lp_arrays
    from surromip.solver.kernel import USING_NUMBA

    rng = np.random.default_rng(seed)
    lps = [make_lp(rng) for _ in range(n_lps)]
    # warm-up triggers jit compilation so it stays out of the timing
    solve_lp_arrays(*lps[0])
    t0 = time.perf_counter()
    objectives = []
    for A, senses, rhs, lb, ub, c in lps:
        res = solve_lp_arrays(A, senses, rhs, lb, ub, c)
        objectives.append(res.objective if res.status == "optimal" else None)
    elapsed = time.perf_counter() - t0
    return {"numba": USING_NUMBA, "lps": n_lps, "seconds": elapsed,
            "objectives": objectives}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--lps", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--emit-json", action="store_true",
                    help="print one timing record and exit (internal)")
    args = ap.parse_args()

    if args.emit_json:
        print(json.dumps(run(args.lps, args.seed)))
        return

    fast = run(args.lps, args.seed)
    env = dict(os.environ, SURROMIP_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, __file__, "--emit-json", "--lps", str(args.lps),
         "--seed", str(args.seed)],
        env=env, capture_output=True, text=True, check=True)
    slow = json.loads(out.stdout)

    def close(a, b):
        if a is None or b is None:
            return a is b
        return abs(a - b) <= 1e-7 * max(1.0, abs(a))

    diffs = sum(not close(a, b)
                for a, b in zip(fast["objectives"], slow["objectives"]))
    if diffs:
        print(f"warning: {diffs} objective(s) differ between the two paths")
    label_fast = "numba kernel" if fast["numba"] else "numpy (numba unavailable)"
    print(f"{args.lps} random LPs, seed {args.seed}")
    print(f"  {label_fast:28s} {fast['seconds']:8.3f}s")
    print(f"  {'numpy fallback':28s} {slow['seconds']:8.3f}s")
    if fast["numba"]:
        print(f"  speedup: {slow['seconds'] / fast['seconds']:.1f}x")


if __name__ == "__main__":
    main()
