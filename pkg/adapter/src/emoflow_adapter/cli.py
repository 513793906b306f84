"""Adapter entry point.

Exit codes: 0 clean end-of-stream, 2 bad invocation, 3 model load failure
(always before any input is consumed).
"""
from __future__ import annotations

import argparse
import sys

from emoflow_adapter import CANONICAL_EMOTIONS
from emoflow_adapter.models import AdapterConfig, ModelLoadError, load_model
from emoflow_adapter.serve import serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emoflow-adapter", description=__doc__)
    parser.add_argument("--model", required=True, help="stub spec (.json) or transformers checkpoint")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--max-seq-len", type=int, default=128)
    parser.add_argument("--device", default="cpu")
    parser.add_argument(
        "--labels",
        default=",".join(CANONICAL_EMOTIONS),
        help="comma-separated emotion order of the model head",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = AdapterConfig(
        model=args.model,
        batch_size=args.batch_size,
        max_seq_len=args.max_seq_len,
        device=args.device,
        labels=tuple(part.strip() for part in args.labels.split(",")),
    )
    try:
        cfg.validate()
    except ValueError as exc:
        print(f"adapter: {exc}", file=sys.stderr)
        return 2
    try:
        model = load_model(cfg)
    except ModelLoadError as exc:
        print(f"adapter: {exc}", file=sys.stderr)
        return 3
    return serve(cfg, model)


if __name__ == "__main__":
    sys.exit(main())
