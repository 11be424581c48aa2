"""Command line front end: export a saved model into interchange JSON.

Exit codes: 0 success, 1 usage error, 2 validation/unsupported-model error.
Model files: sk models are unpickled (pickle/joblib), torch modules loaded
with torch.load, keras models with keras.models.load_model.
"""

from __future__ import annotations

import argparse
import pickle
import sys

from .export import FRAMEWORKS, ExportError, ExportJob, export_model, verify_export

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_model(framework, path):
    if framework == "sk":
        with open(path, "rb") as fh:
            return pickle.load(fh)
    if framework == "torch":
        import torch

        return torch.load(path, weights_only=False)
    if framework == "keras":
        import keras

        return keras.models.load_model(path)
    raise ExportError(
        f"loading saved {framework} models is not supported; "
        "use the Python API with an in-memory model"
    )


def main(argv=None):
    parser = _Parser(prog="surromip-export",
                     description="Export trained models to interchange JSON.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="convert a saved model file")
    p.add_argument("--framework", required=True, choices=FRAMEWORKS)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--verify-samples", type=int, default=0,
                   help="also verify the export on this many samples")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE

    try:
        model = _load_model(args.framework, args.model)
        job = ExportJob(args.framework, model, args.out)
        export_model(job)
        print(f"wrote {args.out}")
        if args.verify_samples > 0:
            dev = verify_export(job, n_samples=args.verify_samples)
            print(f"verified on {args.verify_samples} samples, "
                  f"max deviation {dev:.3e}")
        return EXIT_OK
    except (ExportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
