"""GRN question sketch construction from regulator-edge exports.

Positive questions are the TF -> target edges two independent sources
agree on for the requested tissue. Each positive is matched by one
negative for the same TF: a gene drawn from the shared target universe
that neither source, in any tissue, links to that TF. Sampling is
seeded, so rebuilding with the same inputs reproduces the question set
exactly.

Expected input layouts, all UTF-8 text:
  grndb csv    header tf,target,tissue[,confidence]; one edge per row
  trrust tsv   no header; tf<TAB>target[<TAB>mode[<TAB>refs]]
  go tsv       gene<TAB>term_id[<TAB>term_name]; lines starting with # skipped
"""

from __future__ import annotations

import csv
import random
import warnings
from pathlib import Path
from typing import Optional, Union

from .errors import InputFormatError, InsufficientNegativePool

PathLike = Union[str, Path]

# the sketch format allows 300 questions, half of them positives
MAX_POSITIVES = 150

DEFAULT_FEW_SHOT = (
    "*Example*:\n"
    "• TF: Gata1 and Context A tissues (fetal liver)\n"
    "• Functional overlap (shared GO BP terms): erythrocyte differentiation\n"
    "Decide how much possible Gata1 directly regulates Klf1 in (fetal liver):\n"
    "Reasoning: Gata1 is the master erythroid regulator and Klf1 is one of its "
    "canonical direct targets.\n"
    "Possibility is: 0.95\n\n"
)


def read_grndb(path: PathLike) -> list[tuple[str, str, str]]:
    """Rows of (tf, target, tissue) from a headered csv export."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            fields = set(reader.fieldnames or ())
            if not {"tf", "target", "tissue"} <= fields:
                raise InputFormatError(
                    f"{path}: expected columns tf,target,tissue"
                )
            rows = []
            for i, row in enumerate(reader, start=2):
                tf = (row["tf"] or "").strip()
                target = (row["target"] or "").strip()
                tissue = (row["tissue"] or "").strip()
                if not tf or not target or not tissue:
                    raise InputFormatError(f"{path}: empty field on line {i}")
                rows.append((tf, target, tissue))
    except OSError as exc:
        raise InputFormatError(f"{path}: cannot read ({exc})") from None
    return rows


def read_trrust(path: PathLike) -> list[tuple[str, str]]:
    """Rows of (tf, target) from a headerless tab-separated export."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"{path}: cannot read ({exc})") from None
    rows = []
    for i, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 2 or not parts[0].strip() or not parts[1].strip():
            raise InputFormatError(f"{path}: bad row on line {i}")
        rows.append((parts[0].strip(), parts[1].strip()))
    return rows


def read_go_table(path: PathLike) -> dict[str, set[str]]:
    """Uppercased gene -> set of GO term ids."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"{path}: cannot read ({exc})") from None
    table: dict[str, set[str]] = {}
    for i, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) < 2 or not parts[0].strip() or not parts[1].strip():
            raise InputFormatError(f"{path}: bad row on line {i}")
        table.setdefault(parts[0].strip().upper(), set()).add(parts[1].strip())
    return table


def make_grn_sketch(
    grndb_path: PathLike,
    trrust_path: PathLike,
    go_path: PathLike,
    tissue: str,
    seed: int = 0,
    few_shot: Optional[str] = None,
) -> dict:
    """Intersect the two edge sources and emit a balanced question set."""
    grndb = read_grndb(grndb_path)
    trrust = read_trrust(trrust_path)
    go_table = read_go_table(go_path)

    trrust_edges = {(tf.upper(), tg.upper()) for tf, tg in trrust}
    scenic_edges = {(tf.upper(), tg.upper()) for tf, tg, _ in grndb}
    excluded = trrust_edges | scenic_edges

    # canonical display spelling per gene, first spelling seen wins
    display: dict[str, str] = {}
    for tf, target, _ in grndb:
        display.setdefault(tf.upper(), tf)
        display.setdefault(target.upper(), target)
    for tf, target in trrust:
        display.setdefault(tf.upper(), tf)
        display.setdefault(target.upper(), target)

    wanted = tissue.strip().lower()
    positives: list[tuple[str, str]] = []
    seen_pairs: set[tuple[str, str]] = set()
    for tf, target, row_tissue in grndb:
        if row_tissue.lower() != wanted:
            continue
        key = (tf.upper(), target.upper())
        if key not in trrust_edges or key in seen_pairs:
            continue
        if key[0] == key[1]:
            warnings.warn(f"skipping self-regulation edge {tf} -> {target}")
            continue
        seen_pairs.add(key)
        positives.append((tf, target))
    if not positives:
        raise InputFormatError(f"no verified edges for tissue {tissue!r}")
    if len(positives) > MAX_POSITIVES:
        raise InputFormatError(
            f"{len(positives)} verified edges for {tissue!r} exceed the "
            f"{MAX_POSITIVES}-positive sketch limit"
        )

    universe = {tg.upper() for _, tg, _ in grndb} | {
        tg.upper() for _, tg in trrust
    }
    rng = random.Random(seed)
    negatives: list[tuple[str, str]] = []
    taken: set[tuple[str, str]] = set()
    for tf, _ in positives:
        tf_up = tf.upper()
        pool = sorted(
            gene
            for gene in universe
            if gene != tf_up
            and (tf_up, gene) not in excluded
            and (tf_up, gene) not in taken
        )
        if not pool:
            raise InsufficientNegativePool(
                f"no eligible negative target left for TF {tf}"
            )
        pick = rng.choice(pool)
        taken.add((tf_up, pick))
        negatives.append((tf, display[pick]))

    pairs = [
        {"tf": tf, "target": target, "label": 1} for tf, target in positives
    ] + [{"tf": tf, "target": target, "label": 0} for tf, target in negatives]

    involved = {p["tf"].upper() for p in pairs} | {
        p["target"].upper() for p in pairs
    }
    subtable = {
        gene: sorted(go_table[gene])
        for gene in sorted(involved)
        if gene in go_table
    }

    return {
        "schema_version": "1",
        "kind": "grn",
        "tissue_a": f"adult {tissue}",
        "tissue_b": f"fetal {tissue}",
        "pairs": pairs,
        "go_bp_table": subtable,
        "few_shot_block": few_shot if few_shot is not None else DEFAULT_FEW_SHOT,
    }
