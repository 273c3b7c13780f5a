#!/usr/bin/env python3
"""Run every committed benchmark cell against its replay script.

Covers all three datasets in pilot mode (plus PBMC direct as a
contrast), grades each run, and writes the usual report trio under
demo_out/. Nothing touches the network; this is the quickest way to
see a full trace end to end.

Run from the repo root:  python3 scripts/run_replay_demo.py [out_dir]
"""

from __future__ import annotations

import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from sketchbench.bench import load_registry, report, run_bench, summarize_costs
from sketchbench.engine import EngineConfig
from sketchbench.gateway import Gateway, ReplayBackend
from sketchbench.sketches import Mode

DATA = REPO / "data"


def gateway_factory(registry, script):
    return lambda: Gateway(ReplayBackend.from_file(script), ledger=registry.ledger())


def main() -> int:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_out")
    trace_dir = out_dir / "traces"
    trace_dir.mkdir(parents=True, exist_ok=True)

    registry = load_registry(DATA / "registry.json")
    cfg = EngineConfig()
    cells = [
        ("pbmc3k", Mode.PILOT, DATA / "replay/pbmc3k.pilot.json"),
        ("pbmc3k", Mode.DIRECT, DATA / "replay/pbmc3k.direct.json"),
        ("liver", Mode.PILOT, DATA / "replay/liver.pilot.json"),
        ("stomach", Mode.PILOT, DATA / "replay/stomach.pilot.json"),
    ]

    fragments = []
    for dataset_id, mode, script in cells:
        entry = registry.get(dataset_id)
        fragment = run_bench(
            entry,
            mode,
            repeats=3,
            gateway_factory=gateway_factory(registry, script),
            cfg=cfg,
            trace_dir=trace_dir,
        )
        fragments.append(fragment)
        metrics = "  ".join(
            f"{name}={fragment.mean(name):.4f}" for name in fragment.metric_names()
        )
        print(f"{dataset_id}/{mode.value}: {len(fragment.ok_repeats)}/3 ok  {metrics}")

    paths = report(fragments, out_dir, rate_card=registry.rate_card)
    print(f"\nreport files: {', '.join(str(p) for p in paths.values())}")

    print("\ntoken totals across all traces:")
    for model, tokens_in, tokens_out, usd in summarize_costs(
        trace_dir, registry.rate_card
    ):
        cost = f"${usd}" if usd is not None else "unrated"
        print(f"  {model}: {tokens_in} in / {tokens_out} out -> {cost}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
