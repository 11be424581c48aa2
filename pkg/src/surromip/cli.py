"""Command line front end: formulate, generate, solve, verify.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 solver limit
reached, 4 verification failure.  Set SURROMIP_FEASTOL to override the
default feasibility tolerance of 1e-6.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

from .embed import EmbedError, EmbedOptions, embed_predictor
from .lpio import LpParseError, parse_lp, write_lp, write_mps
from .mip import CONTINUOUS, MipModel, ModelError
from .predictors import PredictorParseError, PredictorValidationError, load_predictor
from .solver import SolveLimits, bb_solve
from .surrogatelib import InstanceRecipe, RecipeError, write_instance
from .verify import check_exactness, report_text

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_LIMIT = 3
EXIT_VERIFY = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _feastol():
    raw = os.environ.get("SURROMIP_FEASTOL")
    if raw is None:
        return 1e-6
    try:
        val = float(raw)
    except ValueError:
        raise SystemExit(EXIT_USAGE)
    if val <= 0:
        raise SystemExit(EXIT_USAGE)
    return val


def _load_bounds(path, input_dim):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    box = [(float(lo), float(hi)) for lo, hi in doc]
    if len(box) != input_dim:
        raise ValueError(
            f"bounds file has {len(box)} entries, predictor wants {input_dim}"
        )
    return box


def _int_tuple(raw):
    if not raw:
        return ()
    return tuple(int(tok) for tok in raw.split(","))


def _cmd_formulate(args):
    pred = load_predictor(args.predictor)
    box = None
    if args.input_bounds:
        box = _load_bounds(args.input_bounds, pred.input_dim)
    opts = EmbedOptions(relu_formulation=args.formulation, epsilon=args.epsilon)
    model = MipModel()
    if box is None:
        xvars = [model.add_var(CONTINUOUS, -math.inf, math.inf, f"in_{i}")
                 for i in range(pred.input_dim)]
    else:
        xvars = [model.add_var(CONTINUOUS, lo, hi, f"in_{i}")
                 for i, (lo, hi) in enumerate(box)]
    embed_predictor(model, pred, xvars, opts=opts, prefix="emb")
    text = write_mps(model) if args.out.endswith(".mps") else write_lp(model)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_generate(args):
    recipe = InstanceRecipe(
        family=args.family,
        predictor_kind=args.predictor_kind,
        problem_params=_int_tuple(args.params),
        predictor_params=_int_tuple(args.predictor_params),
        data_seed=args.data_seed,
        train_seed=args.train_seed,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    mps_path, json_path = write_instance(recipe, args.out_dir)
    print(f"wrote {mps_path}")
    print(f"wrote {json_path}")
    return EXIT_OK


def _cmd_solve(args):
    with open(args.model, encoding="utf-8") as fh:
        model = parse_lp(fh.read())
    limits = SolveLimits(max_nodes=args.max_nodes, max_seconds=args.max_seconds)
    t0 = time.perf_counter()
    res = bb_solve(model, limits)
    elapsed = time.perf_counter() - t0
    print(f"status: {res.status}")
    if res.status in ("optimal", "node_limit", "time_limit") and res.assignment:
        print(f"objective: {res.objective}")
        for v in model.vars:
            print(f"  {v.name} = {res.assignment[v.id]}")
    print(f"nodes: {res.node_count}")
    if not args.no_timing:
        print(f"time: {elapsed:.3f}s")
    if res.status in ("node_limit", "time_limit"):
        return EXIT_LIMIT
    return EXIT_OK


def _cmd_verify(args):
    pred = load_predictor(args.predictor)
    box = None
    if args.input_bounds:
        box = _load_bounds(args.input_bounds, pred.input_dim)
    opts = EmbedOptions(relu_formulation=args.formulation, epsilon=args.epsilon,
                        input_box=box)
    report = check_exactness(pred, opts, n_samples=args.samples, seed=args.seed,
                             feastol=_feastol())
    print(report_text(report))
    return EXIT_OK if report.passed else EXIT_VERIFY


def _build_parser():
    parser = _Parser(prog="surromip",
                     description="Embed trained predictors into MIPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("formulate", help="write a standalone embedding")
    p.add_argument("--predictor", required=True)
    p.add_argument("--input-bounds")
    p.add_argument("--formulation", choices=("bigm", "sos1"), default="bigm")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(run=_cmd_formulate)

    p = sub.add_parser("generate", help="write a benchmark instance")
    p.add_argument("--family", required=True)
    p.add_argument("--params", default="")
    p.add_argument("--predictor-kind", required=True)
    p.add_argument("--predictor-params", default="")
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--train-seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(run=_cmd_generate)

    p = sub.add_parser("solve", help="solve an LP-format model file")
    p.add_argument("--model", required=True)
    p.add_argument("--max-nodes", type=int, default=200_000)
    p.add_argument("--max-seconds", type=float, default=600.0)
    p.add_argument("--no-timing", action="store_true")
    p.set_defaults(run=_cmd_solve)

    p = sub.add_parser("verify", help="run the exactness harness")
    p.add_argument("--predictor", required=True)
    p.add_argument("--input-bounds")
    p.add_argument("--formulation", choices=("bigm", "sos1"), default="bigm")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(run=_cmd_verify)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.run(args)
    except (PredictorParseError, PredictorValidationError, LpParseError,
            RecipeError, ModelError, EmbedError, ValueError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
