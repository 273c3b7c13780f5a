"""Command line entry points.

Exit codes: 0 success, 2 input/validation error, 3 backend error.
Credentials are read from the environment variable named by
--api-key-env (default SKETCHBENCH_API_KEY) and are never printed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .bench import (
    DEFAULT_REPEATS,
    Ablation,
    DatasetEntry,
    Registry,
    grade_prediction,
    load_registry,
    report,
    run_bench,
    summarize_costs,
)
from .engine import EngineConfig
from .errors import BackendError, SketchBenchError, SketchDataError
from .gateway import Gateway, HttpBackend, ReplayBackend, TokenBucket
from .sketches import Mode, TaskKind

DEFAULT_REGISTRY = Path(__file__).resolve().parents[2] / "data" / "registry.json"


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", required=True, help="registered dataset id")
    parser.add_argument("--model", default="replay-model", help="model id")
    parser.add_argument("--mode", choices=["direct", "pilot"], default="pilot")
    parser.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    parser.add_argument("--backend", choices=["live", "replay"], default="replay")
    parser.add_argument("--script", type=Path, help="replay script path")
    parser.add_argument("--registry", type=Path, default=DEFAULT_REGISTRY)
    parser.add_argument("--trace-dir", type=Path, default=None)
    parser.add_argument("--out", type=Path, default=None, help="report directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--endpoint", help="live chat-completions URL")
    parser.add_argument(
        "--api-key-env",
        default="SKETCHBENCH_API_KEY",
        help="environment variable holding the live API key",
    )


def _gateway_factory(args, entry: DatasetEntry, registry: Registry):
    if args.backend == "replay":
        script = args.script or entry.replay_script
        if script is None:
            raise SketchDataError(
                f"{entry.id}: no --script given and no default replay script"
            )
        return lambda: Gateway(
            ReplayBackend.from_file(script), ledger=registry.ledger()
        )
    if not args.endpoint:
        raise SketchDataError("live backend needs --endpoint")
    return lambda: Gateway(
        HttpBackend(endpoint=args.endpoint, api_key_env=args.api_key_env),
        ledger=registry.ledger(),
        bucket=TokenBucket(),
    )


def _cmd_run(args, ablation: Optional[Ablation] = None) -> int:
    registry = load_registry(args.registry)
    entry = registry.get(args.dataset)
    cfg = EngineConfig(model_id=args.model, seed=args.seed)
    fragment = run_bench(
        entry,
        Mode(args.mode),
        args.repeats,
        _gateway_factory(args, entry, registry),
        cfg,
        ablation=ablation,
        trace_dir=args.trace_dir,
    )
    out_dir = args.out or Path("bench_out")
    paths = report([fragment], out_dir, rate_card=registry.rate_card)
    print(paths["txt"].read_text(encoding="utf-8"), end="")
    for repeat in fragment.repeats:
        if not repeat.ok:
            print(f"repeat {repeat.index} FAILED: {repeat.error}", file=sys.stderr)
    print(f"report written to {out_dir}")
    if not fragment.ok_repeats:
        kinds = {r.error_kind for r in fragment.repeats}
        return 3 if "backend" in kinds else 2
    return 0


def _cmd_ablate(args) -> int:
    return _cmd_run(args, ablation=Ablation(kind=args.kind, seed=args.seed))


def _cmd_grade(args) -> int:
    payload = json.loads(Path(args.pred).read_text(encoding="utf-8"))
    prediction = payload.get("prediction", payload)
    entry = DatasetEntry(
        id=Path(args.pred).stem,
        task_kind=TaskKind(args.task),
        sketch_path=Path(args.pred),
        truth_path=Path(args.truth),
        ontology_path=args.ontology,
        synonym_path=args.synonyms,
    )
    metrics = grade_prediction(entry, prediction)
    for name in sorted(metrics):
        print(f"{name}: {metrics[name]:.6f}")
    return 0


def _cmd_cost(args) -> int:
    registry = load_registry(args.registry)
    rows = summarize_costs(args.run, registry.rate_card)
    print(f"{'model':<24}{'input_tokens':>14}{'output_tokens':>15}{'usd':>10}")
    for model, tokens_in, tokens_out, usd in rows:
        usd_text = f"{usd}" if usd is not None else "-"
        print(f"{model:<24}{tokens_in:>14}{tokens_out:>15}{usd_text:>10}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sketchbench",
        description="Benchmark engine for reasoning over single-cell sketches",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a benchmark cell")
    _add_run_args(run_p)
    run_p.set_defaults(func=_cmd_run)

    ablate_p = sub.add_parser("ablate", help="run with a perturbation")
    ablate_p.add_argument(
        "--kind", choices=["nocontext", "goshuffle", "monocle"], required=True
    )
    _add_run_args(ablate_p)
    ablate_p.set_defaults(func=_cmd_ablate)

    grade_p = sub.add_parser("grade", help="grade a saved prediction or trace")
    grade_p.add_argument("--pred", required=True, type=Path)
    grade_p.add_argument("--truth", required=True, type=Path)
    grade_p.add_argument(
        "--task", choices=[k.value for k in TaskKind], required=True
    )
    grade_p.add_argument("--ontology", type=Path, default=None)
    grade_p.add_argument("--synonyms", type=Path, default=None)
    grade_p.set_defaults(func=_cmd_grade)

    cost_p = sub.add_parser("cost", help="aggregate cost over a trace directory")
    cost_p.add_argument("--run", required=True, type=Path, help="trace directory")
    cost_p.add_argument("--registry", type=Path, default=DEFAULT_REGISTRY)
    cost_p.set_defaults(func=_cmd_cost)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SketchDataError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    except SketchBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
