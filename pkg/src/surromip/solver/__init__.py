"""Desk-scale exact MIP solver: bounded simplex + branch and bound."""

from .branch_bound import SolveLimits, bb_solve
from .kernel import USING_NUMBA
from .simplex import LpResult, SimplexFailure, SolveResult, simplex_solve, solve_lp_arrays

__all__ = [
    "SolveLimits",
    "bb_solve",
    "LpResult",
    "SimplexFailure",
    "SolveResult",
    "simplex_solve",
    "solve_lp_arrays",
    "USING_NUMBA",
]
