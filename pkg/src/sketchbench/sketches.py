"""Semantic-sketch interchange types, JSON (de)serialization, validation.

A sketch is the compressed, prompt-sized view of an expression matrix
that a pipeline run consumes: cluster marker summaries for annotation,
lineage evidence for trajectory, TF-gene candidate pairs for GRN
scoring. The on-disk format is UTF-8 JSON tagged with "kind" and
"schema_version" (currently "1"); schemas/sketch.schema.json next to
this module holds the JSON-Schema. Sketch values are immutable after
load.

Gene symbols are stored verbatim but always compared after uppercase
normalization (human symbols are upper, mouse title-case).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

from .errors import InvariantError, ParseError, SchemaError

SCHEMA_VERSION = "1"

# sentinel substituted for context by the metadata ablation
REDACTED_CONTEXT = "UNKNOWN CONTEXT"

# marker_k values exercised by the sensitivity sweep
SUPPORTED_MARKER_K = (5, 10, 20)

MAX_GRN_PAIRS = 300  # 2 * M with M <= 150

TIMEPOINT_SUM_TOL = 1e-6


class TaskKind(Enum):
    ANNOTATION = "annotation"
    TRAJECTORY = "trajectory"
    GRN_PREDICTION = "grn"


class Mode(Enum):
    DIRECT = "direct"
    PILOT = "pilot"


@dataclass(frozen=True)
class TaskQuery:
    """What to run: which task, on which dataset, in which mode."""

    task_kind: TaskKind
    dataset_id: str
    mode: Mode

    def __post_init__(self):
        if not self.dataset_id:
            raise InvariantError("dataset_id must be nonempty")


@dataclass(frozen=True)
class ClusterSummary:
    """One cluster's ranked top genes.

    sparse=True marks clusters that genuinely have fewer than the
    sketch-wide marker_k genes (tiny clusters); otherwise the length
    must equal marker_k exactly.
    """

    cluster_id: int
    top_genes: tuple[str, ...]
    cell_count: Optional[int] = None
    sparse: bool = False


class AbsentGene:
    """Explicit marker for a (cluster, gene) pair with no recorded stats.

    Distinct from zero expression: zero is a measurement, absence means
    the ingestion step never exported the gene.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ABSENT"


ABSENT = AbsentGene()


@dataclass(frozen=True)
class GeneStat:
    mean_expression: float
    fraction_expressing: float


@dataclass(frozen=True)
class ClusterGeneStats:
    """Per-(cluster, gene) expression statistics.

    `table` keeps verbatim gene spellings; lookups go through an
    uppercase index so queries are case-insensitive.
    """

    table: Mapping[int, Mapping[str, GeneStat]]
    _index: Mapping[int, Mapping[str, GeneStat]] = field(
        init=False, repr=False, compare=False, hash=False, default=None
    )

    def __post_init__(self):
        index = {
            cid: {gene.upper(): stat for gene, stat in genes.items()}
            for cid, genes in self.table.items()
        }
        object.__setattr__(self, "_index", index)

    def cluster_ids(self) -> list[int]:
        return sorted(self.table)

    def lookup(self, cluster_id: int, gene: str) -> Union[GeneStat, AbsentGene]:
        return self._index.get(cluster_id, {}).get(gene.upper(), ABSENT)

    def genes_for(self, cluster_id: int) -> list[str]:
        return list(self.table.get(cluster_id, {}))


@dataclass(frozen=True)
class AnnotationSketch:
    context: str
    clusters: tuple[ClusterSummary, ...]
    cluster_count: int
    expression_stats: ClusterGeneStats
    reference_hints: Optional[Mapping[str, tuple[str, ...]]] = None
    marker_k: int = 10

    @property
    def kind(self) -> TaskKind:
        return TaskKind.ANNOTATION

    def cluster_ids(self) -> list[int]:
        return [c.cluster_id for c in self.clusters]


@dataclass(frozen=True)
class TrajectorySketch:
    context: str
    clusters: tuple[ClusterSummary, ...]
    timepoint_percentages: Mapping[int, Mapping[str, float]]
    monocle_report: str

    @property
    def kind(self) -> TaskKind:
        return TaskKind.TRAJECTORY

    def cluster_ids(self) -> list[int]:
        return [c.cluster_id for c in self.clusters]


@dataclass(frozen=True)
class GrnQuestion:
    tf: str
    target: str
    label: Optional[int] = None


@dataclass(frozen=True)
class GrnSketch:
    pairs: tuple[GrnQuestion, ...]
    tissue_a: str
    tissue_b: str
    go_bp_table: Mapping[str, frozenset[str]]
    few_shot_block: str

    @property
    def kind(self) -> TaskKind:
        return TaskKind.GRN_PREDICTION


SemanticSketch = Union[AnnotationSketch, TrajectorySketch, GrnSketch]


# ------------------------------------------------------------------- loading


def _expect(obj: Mapping, key: str, kinds, path: str):
    if key not in obj:
        raise SchemaError(f"{path}.{key}", "missing required field")
    value = obj[key]
    kinds_tuple = kinds if isinstance(kinds, tuple) else (kinds,)
    # bool passes isinstance(..., int); reject it unless bool was asked for
    if isinstance(value, bool) and bool not in kinds_tuple:
        raise SchemaError(f"{path}.{key}", "unexpected bool")
    if not isinstance(value, kinds_tuple):
        wanted = "/".join(k.__name__ for k in kinds_tuple)
        raise SchemaError(
            f"{path}.{key}", f"expected {wanted}, got {type(value).__name__}"
        )
    return value


def _cluster_summary(obj: Any, path: str) -> ClusterSummary:
    if not isinstance(obj, dict):
        raise SchemaError(path, "cluster entry must be an object")
    cid = _expect(obj, "cluster_id", int, path)
    genes = _expect(obj, "top_genes", list, path)
    for i, g in enumerate(genes):
        if not isinstance(g, str):
            raise SchemaError(f"{path}.top_genes[{i}]", "gene symbol must be a string")
    cell_count = obj.get("cell_count")
    if cell_count is not None and not isinstance(cell_count, int):
        raise SchemaError(f"{path}.cell_count", "must be an integer when present")
    sparse = obj.get("sparse", False)
    if not isinstance(sparse, bool):
        raise SchemaError(f"{path}.sparse", "must be a boolean")
    return ClusterSummary(cid, tuple(genes), cell_count, sparse)


def _gene_stats(obj: Any, path: str) -> ClusterGeneStats:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expression_stats must be an object")
    table: dict[int, dict[str, GeneStat]] = {}
    for cid_str, genes in obj.items():
        try:
            cid = int(cid_str)
        except (TypeError, ValueError):
            raise SchemaError(f"{path}.{cid_str}", "cluster key must be an integer")
        if not isinstance(genes, dict):
            raise SchemaError(f"{path}.{cid_str}", "per-cluster stats must be an object")
        row = {}
        for gene, stat in genes.items():
            spath = f"{path}.{cid_str}.{gene}"
            if not isinstance(stat, dict):
                raise SchemaError(spath, "gene stat must be an object")
            mean = _expect(stat, "mean_expression", (int, float), spath)
            frac = _expect(stat, "fraction_expressing", (int, float), spath)
            row[gene] = GeneStat(float(mean), float(frac))
        table[cid] = row
    return ClusterGeneStats(table)


def _from_dict(raw: Any, source: str) -> SemanticSketch:
    if not isinstance(raw, dict):
        raise SchemaError("$", "top level must be a JSON object")
    version = _expect(raw, "schema_version", str, "$")
    if version != SCHEMA_VERSION:
        raise SchemaError("$.schema_version", f"unsupported version {version!r}")
    kind = _expect(raw, "kind", str, "$")

    if kind == TaskKind.ANNOTATION.value:
        clusters = tuple(
            _cluster_summary(c, f"$.clusters[{i}]")
            for i, c in enumerate(_expect(raw, "clusters", list, "$"))
        )
        hints = raw.get("reference_hints")
        parsed_hints = None
        if hints is not None:
            if not isinstance(hints, dict):
                raise SchemaError("$.reference_hints", "must be an object")
            parsed_hints = {}
            for gene, types in hints.items():
                if not isinstance(types, list) or not all(
                    isinstance(t, str) for t in types
                ):
                    raise SchemaError(
                        f"$.reference_hints.{gene}", "must be a list of strings"
                    )
                parsed_hints[gene] = tuple(types)
        return AnnotationSketch(
            context=_expect(raw, "context", str, "$"),
            clusters=clusters,
            cluster_count=_expect(raw, "cluster_count", int, "$"),
            expression_stats=_gene_stats(
                _expect(raw, "expression_stats", dict, "$"), "$.expression_stats"
            ),
            reference_hints=parsed_hints,
            marker_k=raw.get("marker_k", 10),
        )

    if kind == TaskKind.TRAJECTORY.value:
        clusters = tuple(
            _cluster_summary(c, f"$.clusters[{i}]")
            for i, c in enumerate(_expect(raw, "clusters", list, "$"))
        )
        tp_raw = _expect(raw, "timepoint_percentages", dict, "$")
        percentages: dict[int, dict[str, float]] = {}
        for cid_str, stages in tp_raw.items():
            try:
                cid = int(cid_str)
            except (TypeError, ValueError):
                raise SchemaError(
                    f"$.timepoint_percentages.{cid_str}", "cluster key must be an integer"
                )
            if not isinstance(stages, dict):
                raise SchemaError(
                    f"$.timepoint_percentages.{cid_str}", "must map stage -> fraction"
                )
            row = {}
            for stage, frac in stages.items():
                if not isinstance(frac, (int, float)) or isinstance(frac, bool):
                    raise SchemaError(
                        f"$.timepoint_percentages.{cid_str}.{stage}",
                        "fraction must be a number",
                    )
                row[str(stage)] = float(frac)
            percentages[cid] = row
        return TrajectorySketch(
            context=_expect(raw, "context", str, "$"),
            clusters=clusters,
            timepoint_percentages=percentages,
            monocle_report=_expect(raw, "monocle_report", str, "$"),
        )

    if kind == TaskKind.GRN_PREDICTION.value:
        pairs = []
        for i, p in enumerate(_expect(raw, "pairs", list, "$")):
            ppath = f"$.pairs[{i}]"
            if not isinstance(p, dict):
                raise SchemaError(ppath, "pair must be an object")
            label = p.get("label")
            if label is not None and label not in (0, 1):
                raise SchemaError(f"{ppath}.label", "label must be 0 or 1 when present")
            pairs.append(
                GrnQuestion(
                    tf=_expect(p, "tf", str, ppath),
                    target=_expect(p, "target", str, ppath),
                    label=label,
                )
            )
        go_raw = _expect(raw, "go_bp_table", dict, "$")
        go_table = {}
        for gene, terms in go_raw.items():
            if not isinstance(terms, list) or not all(isinstance(t, str) for t in terms):
                raise SchemaError(f"$.go_bp_table.{gene}", "must be a list of term ids")
            go_table[gene] = frozenset(terms)
        return GrnSketch(
            pairs=tuple(pairs),
            tissue_a=_expect(raw, "tissue_a", str, "$"),
            tissue_b=_expect(raw, "tissue_b", str, "$"),
            go_bp_table=go_table,
            few_shot_block=_expect(raw, "few_shot_block", str, "$"),
        )

    raise SchemaError("$.kind", f"unknown sketch kind {kind!r}")


def load_sketch(path: Union[str, Path]) -> SemanticSketch:
    """Load, schema-check, and invariant-check a sketch JSON file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from None
    sketch = _from_dict(raw, str(path))
    violations = validate(sketch)
    if violations:
        raise InvariantError(
            f"{path}: " + "; ".join(f"{v.code}: {v.detail}" for v in violations)
        )
    return sketch


# --------------------------------------------------------------- serializing


def to_json_dict(sketch: SemanticSketch) -> dict:
    def summaries(clusters):
        out = []
        for c in clusters:
            entry: dict[str, Any] = {
                "cluster_id": c.cluster_id,
                "top_genes": list(c.top_genes),
            }
            if c.cell_count is not None:
                entry["cell_count"] = c.cell_count
            if c.sparse:
                entry["sparse"] = True
            out.append(entry)
        return out

    if isinstance(sketch, AnnotationSketch):
        out: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "kind": TaskKind.ANNOTATION.value,
            "context": sketch.context,
            "marker_k": sketch.marker_k,
            "cluster_count": sketch.cluster_count,
            "clusters": summaries(sketch.clusters),
            "expression_stats": {
                str(cid): {
                    gene: {
                        "mean_expression": stat.mean_expression,
                        "fraction_expressing": stat.fraction_expressing,
                    }
                    for gene, stat in genes.items()
                }
                for cid, genes in sketch.expression_stats.table.items()
            },
        }
        if sketch.reference_hints is not None:
            out["reference_hints"] = {
                gene: list(types) for gene, types in sketch.reference_hints.items()
            }
        return out

    if isinstance(sketch, TrajectorySketch):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": TaskKind.TRAJECTORY.value,
            "context": sketch.context,
            "clusters": summaries(sketch.clusters),
            "timepoint_percentages": {
                str(cid): dict(stages)
                for cid, stages in sketch.timepoint_percentages.items()
            },
            "monocle_report": sketch.monocle_report,
        }

    if isinstance(sketch, GrnSketch):
        pairs = []
        for p in sketch.pairs:
            entry: dict[str, Any] = {"tf": p.tf, "target": p.target}
            if p.label is not None:
                entry["label"] = p.label
            pairs.append(entry)
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": TaskKind.GRN_PREDICTION.value,
            "tissue_a": sketch.tissue_a,
            "tissue_b": sketch.tissue_b,
            "pairs": pairs,
            "go_bp_table": {
                gene: sorted(terms) for gene, terms in sketch.go_bp_table.items()
            },
            "few_shot_block": sketch.few_shot_block,
        }

    raise TypeError(f"not a sketch: {type(sketch).__name__}")


def serialize(sketch: SemanticSketch) -> str:
    return json.dumps(to_json_dict(sketch), indent=2, ensure_ascii=False) + "\n"


def save_sketch(sketch: SemanticSketch, path: Union[str, Path]) -> None:
    Path(path).write_text(serialize(sketch), encoding="utf-8")


# ---------------------------------------------------------------- validation


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str


def _validate_clusters(
    clusters: Sequence[ClusterSummary], marker_k: Optional[int]
) -> list[Violation]:
    found = []
    seen: set[int] = set()
    for c in clusters:
        if c.cluster_id in seen:
            found.append(Violation("DUPLICATE_CLUSTER", f"cluster {c.cluster_id}"))
        seen.add(c.cluster_id)
        uppers = [g.upper() for g in c.top_genes]
        if len(set(uppers)) != len(uppers):
            found.append(
                Violation("DUPLICATE_GENE", f"cluster {c.cluster_id} repeats a symbol")
            )
        if any(not g for g in c.top_genes):
            found.append(
                Violation("EMPTY_GENE_SYMBOL", f"cluster {c.cluster_id} has empty symbol")
            )
        if marker_k is not None and not c.sparse and len(c.top_genes) != marker_k:
            found.append(
                Violation(
                    "MARKER_COUNT_MISMATCH",
                    f"cluster {c.cluster_id} lists {len(c.top_genes)} genes, "
                    f"marker_k is {marker_k}",
                )
            )
    if seen and sorted(seen) != list(range(len(seen))):
        found.append(
            Violation(
                "NONCONTIGUOUS_CLUSTER_IDS",
                f"ids {sorted(seen)} are not contiguous from 0",
            )
        )
    return found


def validate(sketch: SemanticSketch) -> list[Violation]:
    """Check every invariant; empty list means the sketch is clean.

    Violations are data, not faults: codes are stable strings callers
    can match on.
    """
    found: list[Violation] = []

    if isinstance(sketch, AnnotationSketch):
        if sketch.marker_k not in SUPPORTED_MARKER_K:
            found.append(
                Violation(
                    "MARKER_K_UNSUPPORTED",
                    f"marker_k {sketch.marker_k} not in {SUPPORTED_MARKER_K}",
                )
            )
        found.extend(_validate_clusters(sketch.clusters, sketch.marker_k))
        if sketch.cluster_count != len(sketch.clusters):
            found.append(
                Violation(
                    "CLUSTER_COUNT_MISMATCH",
                    f"cluster_count {sketch.cluster_count} != {len(sketch.clusters)} entries",
                )
            )
        stat_ids = set(sketch.expression_stats.table)
        for c in sketch.clusters:
            if c.cluster_id not in stat_ids:
                found.append(
                    Violation(
                        "MISSING_STATS",
                        f"expression_stats lacks cluster {c.cluster_id}",
                    )
                )
        for cid, genes in sketch.expression_stats.table.items():
            for gene, stat in genes.items():
                if stat.mean_expression < 0:
                    found.append(
                        Violation(
                            "NEGATIVE_EXPRESSION", f"cluster {cid} gene {gene}"
                        )
                    )
                if not 0.0 <= stat.fraction_expressing <= 1.0:
                    found.append(
                        Violation("FRACTION_RANGE", f"cluster {cid} gene {gene}")
                    )

    elif isinstance(sketch, TrajectorySketch):
        found.extend(_validate_clusters(sketch.clusters, 5))
        for c in sketch.clusters:
            if c.cluster_id not in sketch.timepoint_percentages:
                found.append(
                    Violation(
                        "MISSING_TIMEPOINTS",
                        f"no timepoint percentages for cluster {c.cluster_id}",
                    )
                )
        for cid, stages in sketch.timepoint_percentages.items():
            total = sum(stages.values())
            if not math.isclose(total, 1.0, rel_tol=0, abs_tol=TIMEPOINT_SUM_TOL):
                found.append(
                    Violation(
                        "TIMEPOINT_SUM",
                        f"cluster {cid} percentages sum to {total}, expected 1",
                    )
                )
            for stage, frac in stages.items():
                if not 0.0 <= frac <= 1.0:
                    found.append(
                        Violation("FRACTION_RANGE", f"cluster {cid} stage {stage}")
                    )

    elif isinstance(sketch, GrnSketch):
        if len(sketch.pairs) > MAX_GRN_PAIRS:
            found.append(
                Violation(
                    "TOO_MANY_PAIRS",
                    f"{len(sketch.pairs)} pairs exceeds {MAX_GRN_PAIRS}",
                )
            )
        labeled = [p for p in sketch.pairs if p.label is not None]
        if labeled and len(labeled) != len(sketch.pairs):
            found.append(
                Violation(
                    "PARTIAL_LABELS",
                    f"{len(labeled)} of {len(sketch.pairs)} pairs carry labels",
                )
            )
        for i, p in enumerate(sketch.pairs):
            if p.tf.upper() == p.target.upper():
                found.append(
                    Violation("SELF_REGULATION_PAIR", f"pair {i}: {p.tf} -> {p.target}")
                )
            if not p.tf or not p.target:
                found.append(Violation("EMPTY_GENE_SYMBOL", f"pair {i}"))
        for gene in sketch.go_bp_table:
            if gene != gene.upper():
                found.append(
                    Violation("LOWERCASE_GO_KEY", f"go_bp_table key {gene!r}")
                )
    else:
        raise TypeError(f"not a sketch: {type(sketch).__name__}")

    return found


# ------------------------------------------------------------------ ablation


def redact_metadata(sketch: AnnotationSketch) -> AnnotationSketch:
    """Replace free-text context with the fixed sentinel; idempotent."""
    if sketch.context == REDACTED_CONTEXT:
        return sketch
    return replace(sketch, context=REDACTED_CONTEXT)
