"""surromip: embed trained ML predictors into mixed-integer programs."""

from .embed import EmbedOptions, EmbeddingResult, embed_predictor
from .mip import BINARY, CONTINUOUS, INTEGER, MipModel
from .predictors import Predictor, dims, dump_predictor, evaluate, load_predictor, score_eval
from .solver import SolveLimits, SolveResult, bb_solve, simplex_solve

__version__ = "0.1.0"

__all__ = [
    "EmbedOptions",
    "EmbeddingResult",
    "embed_predictor",
    "BINARY",
    "CONTINUOUS",
    "INTEGER",
    "MipModel",
    "Predictor",
    "dims",
    "dump_predictor",
    "evaluate",
    "load_predictor",
    "score_eval",
    "SolveLimits",
    "SolveResult",
    "bb_solve",
    "simplex_solve",
    "__version__",
]
