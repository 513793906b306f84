"""Command-line entry points.

Subcommands run the whole pipeline or one stage at a time; chained stages
reproduce ``run`` bit for bit. Exit codes: 0 success, 2 config/validation
error, 3 runtime error. Failures print a machine-readable JSON object on
stderr.
"""
from __future__ import annotations

import argparse
import json
import sys

from emoflow import pipeline, synthetic
from emoflow.pipeline import ConfigError, PipelineError

STAGES = {
    "ingest": pipeline.stage_ingest,
    "score": pipeline.stage_score,
    "aggregate": pipeline.stage_aggregate,
    "te": pipeline.stage_te,
    "plot": pipeline.stage_plot,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="pipeline config JSON")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="significance seed (overrides config)")
    parser.add_argument("--bins", type=int, help="bin count (overrides config)")
    parser.add_argument("--window", type=int, help="moving-average window (overrides config)")
    parser.add_argument("--lag", type=int, help="TE lag in days (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emoflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline")
    _add_common(run)
    for stage in STAGES:
        stage_parser = sub.add_parser(stage, help=f"run the {stage} stage")
        _add_common(stage_parser)

    synth = sub.add_parser("synth", help="write a synthetic fixture corpus")
    synth.add_argument("--kind", choices=("driver", "reversal"), default="driver")
    synth.add_argument("--out", required=True, help="fixture directory")
    synth.add_argument("--seed", type=int, default=2024)
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    out = {}
    for key in ("out", "seed", "bins", "window", "lag"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def _fail(kind: str, code: int, message: str, path: str | None = None) -> int:
    payload: dict = {"error": {"kind": kind, "message": message}}
    if path:
        payload["error"]["path"] = path
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            maker = synthetic.make_driver_fixture if args.kind == "driver" else synthetic.make_reversal_fixture
            config_path = maker(args.out, seed=args.seed)
            print(json.dumps({"config": str(config_path)}))
            return 0

        cfg = pipeline.load_config(args.config, _overrides(args))
        if args.command == "run":
            manifest = pipeline.run_pipeline(cfg)
            print(json.dumps(manifest, indent=2, sort_keys=True))
        else:
            STAGES[args.command](cfg)
        return 0
    except ConfigError as exc:
        return _fail("config", 2, str(exc), exc.path)
    except PipelineError as exc:
        return _fail("runtime", 3, str(exc), exc.path)
    except (OSError, ValueError) as exc:
        return _fail("runtime", 3, str(exc))


if __name__ == "__main__":
    sys.exit(main())
