"""Loaders for ground-truth files.

Formats: annotation truth as CSV (cluster_id,label), trajectory truth
as nested-dict JSON (same shape the pipelines predict), GRN labels as
CSV (tf,target,label).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Union

from ..errors import ParseError
from ..parsing import TrajectoryTree, tree_from_nested


def load_annotation_truth(path: Union[str, Path]) -> dict[int, str]:
    out: dict[int, str] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or not {"cluster_id", "label"} <= set(
            reader.fieldnames
        ):
            raise ParseError(f"{path}: header must include cluster_id,label")
        for row in reader:
            try:
                cluster_id = int(row["cluster_id"])
            except (TypeError, ValueError):
                raise ParseError(f"{path}: bad cluster_id {row['cluster_id']!r}")
            out[cluster_id] = (row["label"] or "").strip()
    return out


def load_tree_truth(path: Union[str, Path]) -> TrajectoryTree:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: tree truth must be a JSON object")
    return tree_from_nested(raw)


def load_grn_labels(path: Union[str, Path]) -> dict[tuple[str, str], int]:
    out: dict[tuple[str, str], int] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or not {"tf", "target", "label"} <= set(
            reader.fieldnames
        ):
            raise ParseError(f"{path}: header must include tf,target,label")
        for row in reader:
            label = (row["label"] or "").strip()
            if label not in ("0", "1"):
                raise ParseError(f"{path}: label must be 0 or 1, got {label!r}")
            out[(row["tf"].strip(), row["target"].strip())] = int(label)
    return out
