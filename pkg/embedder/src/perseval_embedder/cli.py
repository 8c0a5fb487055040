"""Command-line entry point: perseval-embedder export."""
from __future__ import annotations

import argparse
import sys

from .errors import ExportError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="perseval-embedder",
        description="Precompute embedding-based distances and masked-LM "
                    "token distributions for the evaluation engine.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    p = commands.add_parser(
        "export", help="export a corpus in one of the two modes")
    p.add_argument("--mode", required=True,
                   choices=("bscore_matrix", "infolm_distributions"))
    p.add_argument("--model", required=True,
                   help="pretrained model name or local checkpoint path")
    p.add_argument("--corpus", required=True,
                   help="evaluation corpus (line-oriented JSON)")
    p.add_argument("--out", required=True, help="output file path")
    p.add_argument("--batch-size", dest="batch_size", type=int, default=8)
    p.add_argument("--top-k", dest="top_k", type=int, default=1024,
                   help="support size cap per exported distribution")
    p.add_argument("--form", choices=("binary", "json"), default="binary",
                   help="matrix serialization (bscore_matrix mode)")
    p.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    from .export import ExportJob, run_export

    try:
        job = ExportJob(
            corpus_path=args.corpus, mode=args.mode, model_name=args.model,
            out_path=args.out, batch_size=args.batch_size,
            top_k=args.top_k, form=args.form, device=args.device,
        )
        print(run_export(job))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
