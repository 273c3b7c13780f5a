"""Benchmark harness: dataset registry, repeated runs, ablations,
grading, and report tables."""

from __future__ import annotations

import dataclasses
import json
import statistics
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence, Union

from . import engine
from .bioops import GoTable, corrupt_monocle, shuffle_go
from .engine import EngineConfig, ReasoningTrace
from .errors import (
    BackendError,
    IncompatibleAblation,
    SchemaError,
    SketchDataError,
    UnknownDataset,
)
from .gateway import CostLedger, Gateway
from .grading import (
    annotation_accuracy,
    auroc,
    brier,
    ece,
    graph_edit_distance,
    graph_from_tree,
    jaccard_nodes,
    load_annotation_truth,
    load_grn_labels,
    load_obo,
    load_synonyms,
    load_tree_truth,
    spectral_distance,
)
from .parsing import tree_from_nested
from .sketches import (
    AnnotationSketch,
    GrnSketch,
    Mode,
    TaskKind,
    TrajectorySketch,
    load_sketch,
    redact_metadata,
)

DEFAULT_REPEATS = 3

ABLATION_KINDS = ("nocontext", "goshuffle", "monocle")
_ABLATION_TASK = {
    "nocontext": TaskKind.ANNOTATION,
    "goshuffle": TaskKind.GRN_PREDICTION,
    "monocle": TaskKind.TRAJECTORY,
}


@dataclass(frozen=True)
class Ablation:
    kind: str  # nocontext | goshuffle | monocle
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ABLATION_KINDS:
            raise IncompatibleAblation(f"unknown ablation kind {self.kind!r}")

    @property
    def tag(self) -> str:
        if self.kind == "nocontext":
            return "nocontext"
        return f"{self.kind}[s{self.seed}]"


@dataclass(frozen=True)
class DatasetEntry:
    id: str
    task_kind: TaskKind
    sketch_path: Path
    truth_path: Path
    ontology_path: Optional[Path] = None  # annotation only
    synonym_path: Optional[Path] = None  # annotation only
    go_table_path: Optional[Path] = None  # grn only
    replay_script: Optional[Path] = None  # default script for replay runs
    notes: str = ""


@dataclass(frozen=True)
class Registry:
    entries: Mapping[str, DatasetEntry]
    rate_card: Mapping[str, tuple[str, str]]  # model -> (in, out) USD per 1M

    def get(self, dataset_id: str) -> DatasetEntry:
        if dataset_id not in self.entries:
            known = ", ".join(sorted(self.entries)) or "(none)"
            raise UnknownDataset(f"{dataset_id!r}; registered: {known}")
        return self.entries[dataset_id]

    def ledger(self) -> CostLedger:
        return CostLedger.with_rates(dict(self.rate_card))


def load_registry(path: Union[str, Path]) -> Registry:
    """Read the JSON dataset registry; paths resolve relative to it."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SketchDataError(f"registry {path}: {exc}") from None
    base = path.parent
    entries: dict[str, DatasetEntry] = {}
    for i, item in enumerate(raw.get("datasets", [])):
        where = f"$.datasets[{i}]"
        for key in ("id", "task_kind", "sketch", "truth"):
            if key not in item:
                raise SchemaError(where, f"missing {key}")
        try:
            kind = TaskKind(item["task_kind"])
        except ValueError:
            raise SchemaError(where, f"unknown task_kind {item['task_kind']!r}")

        def resolve(key: str, required: bool = False) -> Optional[Path]:
            if key not in item or item[key] is None:
                if required:
                    raise SchemaError(where, f"missing {key}")
                return None
            resolved = base / item[key]
            if not resolved.exists():
                raise SketchDataError(f"{where}.{key}: {resolved} does not exist")
            return resolved

        entry = DatasetEntry(
            id=item["id"],
            task_kind=kind,
            sketch_path=resolve("sketch", required=True),
            truth_path=resolve("truth", required=True),
            ontology_path=resolve("ontology"),
            synonym_path=resolve("synonyms"),
            go_table_path=resolve("go_table"),
            replay_script=resolve("replay_script"),
            notes=item.get("notes", ""),
        )
        if entry.id in entries:
            raise SchemaError(where, f"duplicate dataset id {entry.id!r}")
        entries[entry.id] = entry
    card = {
        model: (str(rates[0]), str(rates[1]))
        for model, rates in raw.get("rate_card", {}).items()
    }
    return Registry(entries=entries, rate_card=card)


# ------------------------------------------------------------------ grading


def grade_prediction(
    entry: DatasetEntry,
    prediction: Mapping,
    ged_budget: float = 10.0,
) -> dict[str, float]:
    """Score one trace prediction against the entry's truth assets."""
    if entry.task_kind is TaskKind.ANNOTATION:
        truth = load_annotation_truth(entry.truth_path)
        if entry.ontology_path is None:
            raise SketchDataError(f"{entry.id}: annotation entry needs an ontology")
        dag = load_obo(entry.ontology_path)
        synonyms = (
            load_synonyms(entry.synonym_path) if entry.synonym_path else None
        )
        labels = {int(k): str(v) for k, v in prediction.get("labels", {}).items()}
        scored = annotation_accuracy(labels, truth, dag, synonyms)
        return {"accuracy": scored.mean}

    if entry.task_kind is TaskKind.TRAJECTORY:
        nested = prediction.get("tree")
        if nested is None:
            raise SketchDataError(f"{entry.id}: prediction has no tree")
        pred_tree = graph_from_tree(tree_from_nested(nested), include_root=True)
        truth_tree = graph_from_tree(load_tree_truth(entry.truth_path), include_root=True)
        ged, exact = graph_edit_distance(pred_tree, truth_tree, budget=ged_budget)
        return {
            "jaccard": jaccard_nodes(pred_tree, truth_tree),
            "ged": float(ged),
            "ged_exact": 1.0 if exact else 0.0,
            "spectral": spectral_distance(pred_tree, truth_tree),
        }

    # GRN
    truth_labels = load_grn_labels(entry.truth_path)
    by_pair = {
        (str(e["tf"]), str(e["target"])): e for e in prediction.get("scores", [])
    }
    scores: list[float] = []
    labels_list: list[int] = []
    flagged = 0
    for pair, label in truth_labels.items():
        if pair not in by_pair:
            raise SketchDataError(f"{entry.id}: no score for pair {pair}")
        scores.append(float(by_pair[pair]["score"]))
        labels_list.append(label)
        flagged += bool(by_pair[pair].get("flagged"))
    return {
        "auroc": auroc(scores, labels_list),
        "ece": ece(scores, labels_list),
        "brier": brier(scores, labels_list),
        "flagged": float(flagged),
    }


# ------------------------------------------------------------------- running


@dataclass
class RepeatResult:
    index: int
    ok: bool
    error: Optional[str]
    metrics: dict[str, float]
    trace_path: Optional[str]
    tokens_in: int = 0
    tokens_out: int = 0
    error_kind: Optional[str] = None  # "data" | "backend" | "other"


@dataclass
class BenchFragment:
    dataset_id: str
    task_kind: str
    model_id: str
    mode: str
    ablation: str  # "" when none
    repeats: list[RepeatResult]

    @property
    def ok_repeats(self) -> list[RepeatResult]:
        return [r for r in self.repeats if r.ok]

    @property
    def failures(self) -> int:
        return sum(1 for r in self.repeats if not r.ok)

    def metric_names(self) -> list[str]:
        names: list[str] = []
        for repeat in self.ok_repeats:
            for name in repeat.metrics:
                if name not in names:
                    names.append(name)
        return names

    def raw_scores(self, metric: str) -> list[float]:
        return [r.metrics[metric] for r in self.ok_repeats if metric in r.metrics]

    def mean(self, metric: str) -> float:
        values = self.raw_scores(metric)
        return sum(values) / len(values)

    def sd(self, metric: str) -> float:
        values = self.raw_scores(metric)
        if len(values) < 2:
            return 0.0
        return statistics.stdev(values)

    @property
    def tokens(self) -> tuple[int, int]:
        return (
            sum(r.tokens_in for r in self.repeats),
            sum(r.tokens_out for r in self.repeats),
        )


def _apply_ablation(entry: DatasetEntry, sketch, go_table, ablation: Optional[Ablation]):
    if ablation is None:
        return sketch, go_table
    wanted = _ABLATION_TASK[ablation.kind]
    if entry.task_kind is not wanted:
        raise IncompatibleAblation(
            f"{ablation.kind} applies to {wanted.value} tasks, "
            f"{entry.id} is {entry.task_kind.value}"
        )
    if ablation.kind == "nocontext":
        return redact_metadata(sketch), go_table
    if ablation.kind == "goshuffle":
        return sketch, shuffle_go(go_table, ablation.seed)
    report = corrupt_monocle(sketch.monocle_report, ablation.seed)
    return dataclasses.replace(sketch, monocle_report=report), go_table


def _dispatch(
    sketch,
    entry: DatasetEntry,
    mode: Mode,
    gateway: Gateway,
    cfg: EngineConfig,
    go_table: Optional[GoTable],
) -> ReasoningTrace:
    if isinstance(sketch, AnnotationSketch):
        runner = (
            engine.run_annotation_pilot
            if mode is Mode.PILOT
            else engine.run_annotation_direct
        )
        _, trace = runner(sketch, gateway, cfg, dataset_id=entry.id)
        return trace
    if isinstance(sketch, TrajectorySketch):
        runner = (
            engine.run_trajectory_pilot
            if mode is Mode.PILOT
            else engine.run_trajectory_direct
        )
        _, _, trace = runner(sketch, gateway, cfg, dataset_id=entry.id)
        return trace
    assert isinstance(sketch, GrnSketch)
    _, trace = engine.run_grn(
        sketch, gateway, cfg, mode, go_table=go_table, dataset_id=entry.id
    )
    return trace


def run_bench(
    entry: DatasetEntry,
    mode: Mode,
    repeats: int,
    gateway_factory: Callable[[], Gateway],
    cfg: EngineConfig,
    ablation: Optional[Ablation] = None,
    trace_dir: Optional[Union[str, Path]] = None,
) -> BenchFragment:
    """Run one (dataset, mode) cell R times, grade each repeat.

    A repeat that raises is recorded as a failure and excluded from
    aggregation; the sketch and ablation are resolved once up front, so
    data errors surface immediately instead of as R failures.
    """
    if repeats < 1:
        raise SketchDataError("repeats must be >= 1")
    sketch = load_sketch(entry.sketch_path)
    go_table: Optional[GoTable] = None
    if entry.task_kind is TaskKind.GRN_PREDICTION:
        go_table = (
            GoTable.load_tsv(entry.go_table_path)
            if entry.go_table_path
            else engine._fallback_go_table(sketch)
        )
    sketch, go_table = _apply_ablation(entry, sketch, go_table, ablation)

    tag = ablation.tag if ablation else ""
    results: list[RepeatResult] = []
    model_id = cfg.model_id
    for index in range(1, repeats + 1):
        trace_path: Optional[Path] = None
        if trace_dir is not None:
            stem = f"{entry.id}.{mode.value}" + (f".{tag}" if tag else "")
            trace_path = Path(trace_dir) / f"{stem}.r{index}.trace.json"
        run_cfg = dataclasses.replace(cfg, trace_path=trace_path)
        gateway = gateway_factory()
        try:
            trace = _dispatch(sketch, entry, mode, gateway, run_cfg, go_table)
            metrics = grade_prediction(entry, trace.prediction)
            tokens_in, tokens_out = _ledger_totals(trace.ledger)
            results.append(
                RepeatResult(
                    index=index,
                    ok=True,
                    error=None,
                    metrics=metrics,
                    trace_path=str(trace_path) if trace_path else None,
                    tokens_in=tokens_in,
                    tokens_out=tokens_out,
                )
            )
        except Exception as exc:  # recorded, excluded from aggregates
            if isinstance(exc, BackendError):
                kind = "backend"
            elif isinstance(exc, SketchDataError):
                kind = "data"
            else:
                kind = "other"
            results.append(
                RepeatResult(
                    index=index,
                    ok=False,
                    error=f"{type(exc).__name__}: {exc}",
                    metrics={},
                    trace_path=str(trace_path) if trace_path else None,
                    error_kind=kind,
                )
            )
    return BenchFragment(
        dataset_id=entry.id,
        task_kind=entry.task_kind.value,
        model_id=model_id,
        mode=mode.value,
        ablation=tag,
        repeats=results,
    )


def _ledger_totals(ledger_snapshot: Mapping) -> tuple[int, int]:
    tokens_in = sum(v["input_tokens"] for v in ledger_snapshot.values())
    tokens_out = sum(v["output_tokens"] for v in ledger_snapshot.values())
    return tokens_in, tokens_out


def run_ablation(
    entry: DatasetEntry,
    mode: Mode,
    repeats: int,
    gateway_factory: Callable[[], Gateway],
    cfg: EngineConfig,
    ablation: Ablation,
    trace_dir: Optional[Union[str, Path]] = None,
) -> BenchFragment:
    """run_bench with a mandatory perturbation applied up front."""
    return run_bench(
        entry, mode, repeats, gateway_factory, cfg, ablation, trace_dir
    )


# ------------------------------------------------------------------ reports


def _fragment_rows(fragments: Sequence[BenchFragment]) -> list[dict]:
    rows = []
    ordered = sorted(
        fragments, key=lambda f: (f.dataset_id, f.model_id, f.mode, f.ablation)
    )
    for fragment in ordered:
        for metric in fragment.metric_names():
            raw = fragment.raw_scores(metric)
            rows.append(
                {
                    "dataset": fragment.dataset_id,
                    "task": fragment.task_kind,
                    "model": fragment.model_id,
                    "mode": fragment.mode,
                    "ablation": fragment.ablation,
                    "repeats_ok": len(fragment.ok_repeats),
                    "failures": fragment.failures,
                    "metric": metric,
                    "mean": f"{fragment.mean(metric):.6f}",
                    "sd": f"{fragment.sd(metric):.6f}",
                    "raw": ";".join(f"{v:.6f}" for v in raw),
                }
            )
    return rows


def report(
    fragments: Sequence[BenchFragment],
    out_dir: Union[str, Path],
    rate_card: Optional[Mapping[str, tuple[str, str]]] = None,
) -> dict[str, Path]:
    """Emit bench_report.csv, bench_report.txt, and cost.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = _fragment_rows(fragments)

    csv_path = out / "bench_report.csv"
    header = [
        "dataset",
        "task",
        "model",
        "mode",
        "ablation",
        "repeats_ok",
        "failures",
        "metric",
        "mean",
        "sd",
        "raw",
    ]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(row[key]) for key in header))
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    txt_path = out / "bench_report.txt"
    txt_path.write_text(_aligned_table(fragments), encoding="utf-8")

    cost_path = out / "cost.csv"
    cost_lines = ["dataset,model,mode,ablation,input_tokens,output_tokens,usd"]
    for fragment in sorted(
        fragments, key=lambda f: (f.dataset_id, f.model_id, f.mode, f.ablation)
    ):
        tokens_in, tokens_out = fragment.tokens
        usd = ""
        if rate_card and fragment.model_id in rate_card:
            ledger = CostLedger.with_rates(dict(rate_card))
            ledger.record(fragment.model_id, tokens_in, tokens_out)
            usd = str(ledger.cost(fragment.model_id))
        cost_lines.append(
            f"{fragment.dataset_id},{fragment.model_id},{fragment.mode},"
            f"{fragment.ablation},{tokens_in},{tokens_out},{usd}"
        )
    cost_path.write_text("\n".join(cost_lines) + "\n", encoding="utf-8")
    return {"csv": csv_path, "txt": txt_path, "cost": cost_path}


def _aligned_table(fragments: Sequence[BenchFragment]) -> str:
    ordered = sorted(
        fragments, key=lambda f: (f.dataset_id, f.model_id, f.mode, f.ablation)
    )
    rows = []
    for fragment in ordered:
        metrics = "  ".join(
            f"{name}={fragment.mean(name):.4f}±{fragment.sd(name):.4f}"
            for name in fragment.metric_names()
        )
        rows.append(
            (
                fragment.dataset_id,
                fragment.model_id,
                fragment.mode,
                fragment.ablation or "-",
                f"{len(fragment.ok_repeats)}/{len(fragment.repeats)}",
                metrics or "-",
            )
        )
    header = ("dataset", "model", "mode", "ablation", "ok", "metrics")
    table = [header, *rows]
    widths = [max(len(str(row[i])) for row in table) for i in range(5)]
    lines = []
    for row in table:
        left = "  ".join(str(row[i]).ljust(widths[i]) for i in range(5))
        lines.append(f"{left}  {row[5]}".rstrip())
    return "\n".join(lines) + "\n"


def summarize_costs(
    trace_dir: Union[str, Path], rate_card: Mapping[str, tuple[str, str]]
) -> list[tuple[str, int, int, Optional[Decimal]]]:
    """Aggregate ledgers across every trace file under a directory."""
    totals: dict[str, list[int]] = {}
    trace_files = sorted(Path(trace_dir).glob("*.trace.json"))
    if not trace_files:
        raise SketchDataError(f"no *.trace.json files under {trace_dir}")
    for path in trace_files:
        payload = json.loads(path.read_text(encoding="utf-8"))
        for model, counts in payload.get("ledger", {}).items():
            bucket = totals.setdefault(model, [0, 0])
            bucket[0] += counts["input_tokens"]
            bucket[1] += counts["output_tokens"]
    ledger = CostLedger.with_rates(dict(rate_card))
    out = []
    for model in sorted(totals):
        tokens_in, tokens_out = totals[model]
        ledger.record(model, tokens_in, tokens_out)
        usd = ledger.cost(model) if model in rate_card else None
        out.append((model, tokens_in, tokens_out, usd))
    return out
