"""Command-line entry points, one per sketch kind.

Each command builds one sketch and writes it under the benchmark data
directory (data/sketches/ relative to the working directory) unless
--out points elsewhere. Existing files are never overwritten without
--force. Exit codes: 0 success, 2 for input or validation problems.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from sketchbench.errors import SketchDataError

from .annotation import make_annotation_sketch
from .config import ClusteringConfig
from .errors import InputFormatError, SketchIngestError
from .grn import make_grn_sketch
from .io import write_sketch
from .trajectory import DEFAULT_TIMEPOINT_KEY, make_trajectory_sketch

DEFAULT_OUT_DIR = Path("data") / "sketches"


def _parse_hvg(value: str) -> Optional[int]:
    if value.lower() == "all":
        return None
    try:
        return int(value)
    except ValueError:
        raise InputFormatError(f"--hvg takes an integer or 'all', got {value!r}")


def _emit(sketch: dict, out: Path, force: bool, summary: str) -> int:
    if out.exists() and not force:
        print(f"error: {out} exists; pass --force to overwrite", file=sys.stderr)
        return 2
    write_sketch(sketch, out)
    print(f"wrote {out} ({summary})")
    return 0


def _shared_h5ad_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("h5ad", help="input expression file")
    parser.add_argument("--out", help="output sketch path")
    parser.add_argument(
        "--resolution", type=float, help="community detection resolution"
    )
    parser.add_argument(
        "--dataset", help="dataset id with a pinned resolution in the config"
    )
    parser.add_argument(
        "--hvg",
        default="2000",
        help="highly variable gene count for marker stats, or 'all'",
    )
    parser.add_argument("--sidecar", help="context sidecar path override")
    parser.add_argument(
        "--force", action="store_true", help="overwrite an existing output file"
    )


def annotation_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sketch-annotation",
        description="Build an annotation sketch from an h5ad file.",
    )
    _shared_h5ad_args(parser)
    parser.add_argument(
        "--k", type=int, default=10, help="marker genes per cluster (5, 10 or 20)"
    )
    args = parser.parse_args(argv)
    try:
        cfg = ClusteringConfig(n_hvg=_parse_hvg(args.hvg))
        sketch = make_annotation_sketch(
            args.h5ad,
            k=args.k,
            resolution=args.resolution,
            dataset_id=args.dataset,
            sidecar=args.sidecar,
            cfg=cfg,
        )
        out = Path(
            args.out
            or DEFAULT_OUT_DIR / f"{Path(args.h5ad).stem}.annotation.json"
        )
        return _emit(
            sketch, out, args.force,
            f"annotation, {sketch['cluster_count']} clusters",
        )
    except (SketchIngestError, SketchDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def trajectory_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sketch-trajectory",
        description="Build a trajectory sketch from an h5ad file.",
    )
    _shared_h5ad_args(parser)
    parser.add_argument(
        "--timepoint-key",
        default=DEFAULT_TIMEPOINT_KEY,
        help="obs column holding sampling timepoints",
    )
    args = parser.parse_args(argv)
    try:
        cfg = ClusteringConfig(n_hvg=_parse_hvg(args.hvg))
        sketch = make_trajectory_sketch(
            args.h5ad,
            resolution=args.resolution,
            dataset_id=args.dataset,
            timepoint_key=args.timepoint_key,
            sidecar=args.sidecar,
            cfg=cfg,
        )
        out = Path(
            args.out
            or DEFAULT_OUT_DIR / f"{Path(args.h5ad).stem}.trajectory.json"
        )
        stages = {
            stage
            for shares in sketch["timepoint_percentages"].values()
            for stage in shares
        }
        return _emit(
            sketch, out, args.force,
            f"trajectory, {len(sketch['clusters'])} clusters, "
            f"{len(stages)} timepoints",
        )
    except (SketchIngestError, SketchDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def grn_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="sketch-grn",
        description="Build a GRN question sketch from edge exports.",
    )
    parser.add_argument("--grndb", required=True, help="grndb csv export")
    parser.add_argument("--trrust", required=True, help="trrust tsv export")
    parser.add_argument("--go", required=True, help="GO BP annotation tsv")
    parser.add_argument("--tissue", required=True, help="tissue to intersect on")
    parser.add_argument(
        "--seed", type=int, default=0, help="negative sampling seed"
    )
    parser.add_argument(
        "--few-shot-file", help="file whose text replaces the built-in example"
    )
    parser.add_argument("--out", help="output sketch path")
    parser.add_argument(
        "--force", action="store_true", help="overwrite an existing output file"
    )
    args = parser.parse_args(argv)
    try:
        few_shot = None
        if args.few_shot_file:
            few_shot = Path(args.few_shot_file).read_text(encoding="utf-8")
        sketch = make_grn_sketch(
            args.grndb,
            args.trrust,
            args.go,
            args.tissue,
            seed=args.seed,
            few_shot=few_shot,
        )
        out = Path(args.out or DEFAULT_OUT_DIR / f"{args.tissue}.grn.json")
        tf_count = len({p["tf"] for p in sketch["pairs"]})
        return _emit(
            sketch, out, args.force,
            f"grn, {len(sketch['pairs'])} questions, {tf_count} TFs",
        )
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SketchIngestError, SketchDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
