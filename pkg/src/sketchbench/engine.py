"""Pipeline orchestration: the three iterative reasoning pipelines,
their single-shot baselines, and full trace recording.

Every model call and every operator invocation becomes one trace step;
a run aborted by a parser or backend error still persists its partial
trace before the error propagates.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

from .bioops import (
    DE_TOP_N,
    HIGH_FRACTION_THRESHOLD,
    HIGH_MEAN_THRESHOLD,
    SIMILARITY_THRESHOLD,
    DiffResult,
    DotplotSummary,
    GoTable,
    GoTerm,
    dotplot_summary,
    go_overlap,
)
from .errors import ClosureViolation, ExtractionError, InvariantError
from .gateway import ChatRequest, Gateway, content_fingerprint
from .parsing import (
    TrajectoryTree,
    extract_cluster_map,
    extract_eval_report,
    extract_marker_genes,
    extract_possibility,
    extract_tree,
    serialize_tree,
)
from .prompts import NO_RULE_PROVIDED, PromptStage, render
from .sketches import (
    SCHEMA_VERSION,
    AnnotationSketch,
    GrnSketch,
    Mode,
    TrajectorySketch,
)

UNKNOWN_LABEL = "Unknown"
MAX_ITERATIONS = 3


@dataclass(frozen=True)
class EngineConfig:
    """Run-level knobs; everything that shapes prompts or scoring."""

    model_id: str = "replay-model"
    seed: int = 0
    temperature: Optional[float] = None
    max_iterations: int = MAX_ITERATIONS
    high_threshold: tuple[float, float] = (
        HIGH_MEAN_THRESHOLD,
        HIGH_FRACTION_THRESHOLD,
    )
    similarity_threshold: float = SIMILARITY_THRESHOLD
    de_top_n: int = DE_TOP_N
    duplet_rule: str = NO_RULE_PROVIDED
    contamination_rule: str = NO_RULE_PROVIDED
    trace_path: Optional[Union[str, Path]] = None

    def snapshot(self) -> dict:
        """Config as stable JSON-ready scalars; output paths excluded."""
        raw = dataclasses.asdict(self)
        raw.pop("trace_path")
        raw["high_threshold"] = list(self.high_threshold)
        digest = content_fingerprint(json.dumps(raw, sort_keys=True))
        return {**raw, "config_digest": digest}


# ------------------------------------------------------------------ trace


@dataclass(frozen=True)
class TraceStep:
    index: int  # contiguous from 1
    kind: str  # "llm" or "operator"
    claim: str  # model text, or a one-line operator summary
    operator: dict  # id, params, result_digest
    state_delta: str


@dataclass
class ReasoningTrace:
    task_kind: str
    mode: str
    dataset_id: str
    status: str  # "complete" or "aborted"
    note: Optional[str]
    error: Optional[str]
    steps: tuple[TraceStep, ...]
    prediction: Any
    ledger: dict
    config: dict

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "task_kind": self.task_kind,
            "mode": self.mode,
            "dataset_id": self.dataset_id,
            "status": self.status,
            "note": self.note,
            "error": self.error,
            "steps": [dataclasses.asdict(step) for step in self.steps],
            "prediction": self.prediction,
            "ledger": self.ledger,
            "config": self.config,
        }


def save_trace(trace: ReasoningTrace, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(trace.to_json_dict(), indent=2, ensure_ascii=False)
    path.write_text(payload + "\n", encoding="utf-8")


def load_trace(path: Union[str, Path]) -> ReasoningTrace:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    steps = tuple(
        TraceStep(
            index=s["index"],
            kind=s["kind"],
            claim=s["claim"],
            operator=s["operator"],
            state_delta=s["state_delta"],
        )
        for s in raw["steps"]
    )
    return ReasoningTrace(
        task_kind=raw["task_kind"],
        mode=raw["mode"],
        dataset_id=raw["dataset_id"],
        status=raw["status"],
        note=raw.get("note"),
        error=raw.get("error"),
        steps=steps,
        prediction=raw["prediction"],
        ledger=raw["ledger"],
        config=raw["config"],
    )


def _digest(payload: Any) -> str:
    return content_fingerprint(json.dumps(payload, sort_keys=True, default=str))


class _TraceBuilder:
    def __init__(
        self,
        task_kind: str,
        mode: str,
        dataset_id: str,
        cfg: EngineConfig,
        gateway: Gateway,
    ):
        self.task_kind = task_kind
        self.mode = mode
        self.dataset_id = dataset_id
        self.cfg = cfg
        self.gateway = gateway
        self._steps: list[dict] = []

    def llm_step(
        self, stage_tag: str, stage: PromptStage, bindings: Mapping[str, object]
    ) -> str:
        system_role, content = render(stage, bindings)
        request = ChatRequest(
            system_role=system_role,
            content=content,
            model_id=self.cfg.model_id,
            stage_tag=stage_tag,
            temperature=self.cfg.temperature,
        )
        response = self.gateway.complete(request)
        self._steps.append(
            {
                "kind": "llm",
                "claim": response.text,
                "operator": {
                    "id": stage_tag,
                    "params": {
                        "stage": stage.value,
                        "model": self.cfg.model_id,
                        "prompt_fingerprint": content_fingerprint(content),
                    },
                    "result_digest": _digest(response.text),
                },
                "state_delta": "",
            }
        )
        return response.text

    def operator_step(
        self, op_id: str, params: dict, result: Any, claim: str, delta: str
    ) -> None:
        self._steps.append(
            {
                "kind": "operator",
                "claim": claim,
                "operator": {
                    "id": op_id,
                    "params": params,
                    "result_digest": _digest(result),
                },
                "state_delta": delta,
            }
        )

    def set_delta(self, description: str) -> None:
        if self._steps:
            self._steps[-1]["state_delta"] = description

    def _build(
        self,
        prediction: Any,
        status: str,
        note: Optional[str],
        error: Optional[str],
    ) -> ReasoningTrace:
        steps = tuple(
            TraceStep(index=i + 1, **payload) for i, payload in enumerate(self._steps)
        )
        trace = ReasoningTrace(
            task_kind=self.task_kind,
            mode=self.mode,
            dataset_id=self.dataset_id,
            status=status,
            note=note,
            error=error,
            steps=steps,
            prediction=prediction,
            ledger=self.gateway.ledger.snapshot(),
            config=self.cfg.snapshot(),
        )
        if self.cfg.trace_path is not None:
            save_trace(trace, self.cfg.trace_path)
        return trace

    def complete(self, prediction: Any, note: Optional[str] = None) -> ReasoningTrace:
        return self._build(prediction, "complete", note, None)

    def abort(self, exc: Exception, prediction: Any) -> ReasoningTrace:
        return self._build(
            prediction, "aborted", None, f"{type(exc).__name__}: {exc}"
        )


# ------------------------------------------------------------- formatting


def fmt_value(value: Any) -> str:
    """Deterministic python-literal rendering for prompt bindings."""
    if isinstance(value, Mapping):
        return fmt_mapping(value, sort=False)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(fmt_value(v) for v in value) + "]"
    if isinstance(value, (set, frozenset)):
        return "[" + ", ".join(fmt_value(v) for v in sorted(value)) + "]"
    return repr(value)


def fmt_mapping(mapping: Mapping, sort: bool = True) -> str:
    keys = sorted(mapping) if sort else list(mapping)
    return "{" + ", ".join(f"{k!r}: {fmt_value(mapping[k])}" for k in keys) + "}"


def _fmt_gene_dict(sketch: Union[AnnotationSketch, TrajectorySketch]) -> str:
    return fmt_mapping(
        {c.cluster_id: list(c.top_genes) for c in sketch.clusters}
    )


def _fmt_percentages(sketch: TrajectorySketch) -> str:
    return fmt_mapping(
        {cid: dict(stages) for cid, stages in sketch.timepoint_percentages.items()}
    )


def _fmt_similar(pairs: Sequence[DiffResult]) -> str:
    rendered = {
        (d.cluster_a, d.cluster_b): {e.gene: round(e.delta, 4) for e in d.entries}
        for d in pairs
    }
    return fmt_mapping(rendered)


def _fmt_cluster_sizes(sketch: AnnotationSketch) -> str:
    return fmt_mapping(
        {
            c.cluster_id: (c.cell_count if c.cell_count is not None else "NA")
            for c in sketch.clusters
        }
    )


# ------------------------------------------------------------- annotation


def run_annotation_direct(
    sketch: AnnotationSketch,
    gateway: Gateway,
    cfg: EngineConfig,
    dataset_id: str = "",
) -> tuple[dict[int, str], ReasoningTrace]:
    """One-call baseline: render, complete, parse the cluster map."""
    builder = _TraceBuilder("annotation", "direct", dataset_id, cfg, gateway)
    try:
        text = builder.llm_step(
            "annot.direct",
            PromptStage.ANNOT_DIRECT,
            {
                "context": sketch.context,
                "cluster_gene_dict": _fmt_gene_dict(sketch),
            },
        )
        labels = extract_cluster_map(text)
        builder.set_delta(f"cluster map parsed: {len(labels)} entries")
    except Exception as exc:
        builder.abort(exc, prediction={"labels": {}})
        raise
    trace = builder.complete(_annotation_prediction(labels))
    return labels, trace


def _annotation_prediction(labels: Mapping[int, str]) -> dict:
    return {"labels": {str(cid): labels[cid] for cid in sorted(labels)}}


def run_annotation_pilot(
    sketch: AnnotationSketch,
    gateway: Gateway,
    cfg: EngineConfig,
    dataset_id: str = "",
) -> tuple[dict[int, str], ReasoningTrace]:
    """Iterative annotation: hypothesis, marker proposal, dotplot
    evaluation, up to cfg.max_iterations rounds.

    Stabilized clusters never change label afterwards; ids still
    unlabeled when the budget runs out come back as "Unknown".
    Hitting the iteration cap is success, recorded in the trace note.
    """
    all_ids = sketch.cluster_ids()
    id_set = set(all_ids)
    labels: dict[int, str] = {}
    stabilized: set[int] = set()
    hypothesis = sketch.context
    iteration_summary = ""
    successful_genes: list[str] = []
    failed_genes: list[str] = []
    fully_stable = False

    builder = _TraceBuilder("annotation", "pilot", dataset_id, cfg, gateway)
    try:
        for iteration in range(1, cfg.max_iterations + 1):
            no_gene = sorted(id_set - set(labels))

            hyp_bindings: dict[str, object] = {
                "marker_k": str(sketch.marker_k),
                "cluster_gene_dict": _fmt_gene_dict(sketch),
                "hypothesis": hypothesis,
            }
            if sketch.reference_hints:
                hyp_bindings["reference_dict"] = fmt_mapping(
                    {g: list(t) for g, t in sketch.reference_hints.items()}
                )
            if labels:
                hyp_bindings["annotation_dict"] = fmt_mapping(labels)
            if no_gene:
                hyp_bindings["no_gene_cluster"] = fmt_value(no_gene)
            if iteration_summary:
                hyp_bindings["iteration_summary"] = iteration_summary
            hypothesis = builder.llm_step(
                f"annot.hypothesis.{iteration}",
                PromptStage.ANNOT_HYPOTHESIS,
                hyp_bindings,
            )
            builder.set_delta("hypothesis replaced with model response")

            proposal_text = builder.llm_step(
                f"annot.marker_proposal.{iteration}",
                PromptStage.ANNOT_MARKER_PROPOSAL,
                {
                    "hypothesis": hypothesis,
                    "annotation_dict": fmt_mapping(labels),
                    "no_gene_cluster": fmt_value(no_gene),
                    "successful_genes": fmt_value(successful_genes),
                    "failed_genes": fmt_value(failed_genes),
                },
            )
            markers = extract_marker_genes(proposal_text)
            builder.set_delta(f"marker panel proposed: {len(markers)} genes")

            summary = dotplot_summary(
                sketch.expression_stats,
                markers,
                cfg.high_threshold,
                cfg.similarity_threshold,
                cfg.de_top_n,
            )
            builder.operator_step(
                "dotplot_summary",
                {
                    "genes": list(markers),
                    "high_threshold": list(cfg.high_threshold),
                },
                _dotplot_payload(summary),
                f"dotplot over {len(markers)} genes: "
                f"{len(summary.success_list)} expressed, "
                f"{len(summary.fail_list)} not",
                f"empty clusters: {list(summary.empty_keys)}",
            )
            for diff in summary.similar_clusters:
                builder.operator_step(
                    "similar_cluster_de",
                    {"pair": [diff.cluster_a, diff.cluster_b], "n": cfg.de_top_n},
                    [[e.gene, e.delta] for e in diff.entries],
                    f"clusters {diff.cluster_a} and {diff.cluster_b} "
                    "near-identical; top differential genes attached",
                    "similar pair flagged for the evaluation prompt",
                )

            eval_text = builder.llm_step(
                f"annot.dotplot_eval.{iteration}",
                PromptStage.ANNOT_DOTPLOT_EVAL,
                {
                    "possible_cell_types": proposal_text,
                    "marker_genes": fmt_value(list(markers)),
                    "empty_keys": fmt_value(list(summary.empty_keys)),
                    "success_list": fmt_value(list(summary.success_list)),
                    "fail_list": fmt_value(list(summary.fail_list)),
                    "similar_clusters_dict": _fmt_similar(summary.similar_clusters),
                    "duplet_rule": cfg.duplet_rule,
                    "contamination_rule": cfg.contamination_rule,
                    "cluster_size": _fmt_cluster_sizes(sketch),
                    "iteration": str(iteration),
                },
            )
            report = extract_eval_report(eval_text, iteration)

            merged: list[int] = []
            for cid in sorted(report.annotations):
                if cid in stabilized or cid not in id_set:
                    continue
                labels[cid] = report.annotations[cid]
                merged.append(cid)
            newly_stable = (report.stabilized & set(labels)) - stabilized
            stabilized |= newly_stable
            builder.set_delta(
                f"labels merged for {merged}; stabilized += {sorted(newly_stable)}"
                + (" (derived)" if report.derived else "")
            )

            successful_genes = list(summary.success_list)
            failed_genes = list(summary.fail_list)
            iteration_summary = eval_text

            if id_set <= set(labels) and id_set <= stabilized:
                fully_stable = True
                break
    except Exception as exc:
        builder.abort(exc, prediction=_annotation_prediction(labels))
        raise

    final = {cid: labels.get(cid, UNKNOWN_LABEL) for cid in all_ids}
    note = None if fully_stable else "MaxIterationsReached"
    trace = builder.complete(_annotation_prediction(final), note=note)
    return final, trace


def _dotplot_payload(summary: DotplotSummary) -> dict:
    return {
        "success": list(summary.success_list),
        "fail": list(summary.fail_list),
        "matched": {str(k): list(v) for k, v in sorted(summary.matched.items())},
        "empty_keys": list(summary.empty_keys),
        "absent": sorted(summary.absent_genes),
        "similar": [
            [d.cluster_a, d.cluster_b, [[e.gene, e.delta] for e in d.entries]]
            for d in summary.similar_clusters
        ],
    }


# ------------------------------------------------------------- trajectory


def _closure_gap(
    tree: TrajectoryTree, labels: Mapping[int, str]
) -> Optional[str]:
    """Disagreement between annotation dict and tree nodes, or None."""
    named = {label.strip() for label in labels.values()}
    in_tree = set(tree.non_root_nodes())
    only_named = sorted(named - in_tree)
    only_tree = sorted(in_tree - named)
    if not only_named and not only_tree:
        return None
    parts = []
    if only_named:
        parts.append(f"annotated but not in tree: {only_named}")
    if only_tree:
        parts.append(f"in tree but not annotated: {only_tree}")
    return "; ".join(parts)


def _trajectory_prediction(
    tree: Optional[TrajectoryTree], labels: Mapping[int, str]
) -> dict:
    return {
        "tree": tree.to_nested() if tree is not None else None,
        "labels": {str(cid): labels[cid] for cid in sorted(labels)},
    }


def run_trajectory_pilot(
    sketch: TrajectorySketch,
    gateway: Gateway,
    cfg: EngineConfig,
    dataset_id: str = "",
) -> tuple[TrajectoryTree, dict[int, str], ReasoningTrace]:
    """Seven-stage trajectory pipeline with the closure rule.

    annotate -> root -> tree -> finalize -> lineage analysis ->
    reconsider -> synthesis. A synthesis whose annotation dict and tree
    disagree gets exactly one re-prompt, then ClosureViolation.
    """
    builder = _TraceBuilder("trajectory", "pilot", dataset_id, cfg, gateway)
    cluster_map: dict[int, str] = {}
    final_tree: Optional[TrajectoryTree] = None
    final_map: dict[int, str] = {}
    try:
        if not sketch.monocle_report.strip():
            raise InvariantError(
                "monocle_report must be nonempty for the refinement stages"
            )
        context = sketch.context
        day_percentage = _fmt_percentages(sketch)

        annotate_text = builder.llm_step(
            "traj.annotate",
            PromptStage.TRAJ_ANNOTATE,
            {
                "context": context,
                "top5_dict": _fmt_gene_dict(sketch),
                "day_percentage": day_percentage,
            },
        )
        cluster_map = extract_cluster_map(annotate_text)
        builder.set_delta(f"clusters annotated: {len(cluster_map)}")
        annotated = fmt_mapping(cluster_map)

        root_text = builder.llm_step(
            "traj.root",
            PromptStage.TRAJ_ROOT,
            {
                "context": context,
                "annotated_clusters": annotated,
                "day_percentage": day_percentage,
            },
        )
        root_cluster = root_text.strip()
        builder.set_delta("root selection recorded verbatim")

        tree_text = builder.llm_step(
            "traj.tree",
            PromptStage.TRAJ_TREE,
            {
                "root_cluster": root_cluster,
                "context": context,
                "annotated_clusters": annotated,
                "day_percentage": day_percentage,
            },
        )
        builder.set_delta("draft structure captured for finalization")

        finalize_text = builder.llm_step(
            "traj.finalize",
            PromptStage.TRAJ_FINALIZE,
            {"whole_tree": tree_text},
        )
        draft_tree = extract_tree(finalize_text)
        builder.set_delta(
            f"draft tree parsed: {len(draft_tree.non_root_nodes())} nodes"
        )
        tree_str = serialize_tree(draft_tree)

        analysis_text = builder.llm_step(
            "traj.monocle_analysis",
            PromptStage.TRAJ_MONOCLE_ANALYSIS,
            {
                "context": context,
                "trajectory_tree": tree_str,
                "annotated_clusters": annotated,
                "trajectory_report": sketch.monocle_report,
            },
        )
        builder.set_delta("free-text lineage analysis recorded (not parsed)")

        reconsider_text = builder.llm_step(
            "traj.reconsider",
            PromptStage.TRAJ_RECONSIDER,
            {
                "context": context,
                "trajectory_tree": tree_str,
                "annotated_clusters": annotated,
                "trajectory_report": sketch.monocle_report,
                "analysis": analysis_text,
            },
        )
        builder.set_delta("revision drafted; synthesis next")

        for attempt in (1, 2):
            tag = "traj.synthesis" if attempt == 1 else "traj.synthesis.retry"
            synthesis_text = builder.llm_step(
                tag, PromptStage.TRAJ_SYNTHESIS, {"response": reconsider_text}
            )
            final_tree = extract_tree(synthesis_text)
            final_map = extract_cluster_map(synthesis_text)
            gap = _closure_gap(final_tree, final_map)
            if gap is None:
                builder.set_delta(
                    f"final tree ({len(final_tree.non_root_nodes())} nodes) and "
                    f"annotation ({len(final_map)} clusters) agree"
                )
                break
            builder.set_delta(f"closure violated: {gap}")
            if attempt == 2:
                raise ClosureViolation(gap)
    except Exception as exc:
        builder.abort(exc, prediction=_trajectory_prediction(final_tree, final_map))
        raise

    assert final_tree is not None
    trace = builder.complete(_trajectory_prediction(final_tree, final_map))
    return final_tree, final_map, trace


def run_trajectory_direct(
    sketch: TrajectorySketch,
    gateway: Gateway,
    cfg: EngineConfig,
    dataset_id: str = "",
) -> tuple[TrajectoryTree, dict[int, str], ReasoningTrace]:
    """Three independent calls: annotate, draft tree, reconsider.

    The third call still consumes the lineage diagnostic report; its
    analysis slot is left empty (no analysis stage in this mode).
    """
    builder = _TraceBuilder("trajectory", "direct", dataset_id, cfg, gateway)
    final_tree: Optional[TrajectoryTree] = None
    final_map: dict[int, str] = {}
    try:
        if not sketch.monocle_report.strip():
            raise InvariantError(
                "monocle_report must be nonempty before the reconsider step"
            )
        context = sketch.context
        day_percentage = _fmt_percentages(sketch)

        annotate_text = builder.llm_step(
            "traj.annotate",
            PromptStage.TRAJ_ANNOTATE,
            {
                "context": context,
                "top5_dict": _fmt_gene_dict(sketch),
                "day_percentage": day_percentage,
            },
        )
        cluster_map = extract_cluster_map(annotate_text)
        builder.set_delta(f"clusters annotated: {len(cluster_map)}")
        annotated = fmt_mapping(cluster_map)

        draft_text = builder.llm_step(
            "traj.direct_tree",
            PromptStage.TRAJ_DIRECT_TREE,
            {
                "context": context,
                "annotated_clusters": annotated,
                "day_percentage": day_percentage,
            },
        )
        draft_tree = extract_tree(draft_text)
        builder.set_delta(
            f"draft tree parsed: {len(draft_tree.non_root_nodes())} nodes"
        )

        reconsider_text = builder.llm_step(
            "traj.reconsider",
            PromptStage.TRAJ_RECONSIDER,
            {
                "context": context,
                "trajectory_tree": serialize_tree(draft_tree),
                "annotated_clusters": annotated,
                "trajectory_report": sketch.monocle_report,
                "analysis": "",
            },
        )
        final_tree = extract_tree(reconsider_text)
        final_map = extract_cluster_map(reconsider_text)
        builder.set_delta(
            f"final tree ({len(final_tree.non_root_nodes())} nodes) and "
            f"annotation ({len(final_map)} clusters) parsed"
        )
    except Exception as exc:
        builder.abort(exc, prediction=_trajectory_prediction(final_tree, final_map))
        raise

    trace = builder.complete(_trajectory_prediction(final_tree, final_map))
    return final_tree, final_map, trace


# -------------------------------------------------------------------- GRN


def _fallback_go_table(sketch: GrnSketch) -> GoTable:
    """Sketches embed term ids only; without a names table the ids
    double as display names."""
    return GoTable(
        {
            gene: {GoTerm(term_id, term_id) for term_id in terms}
            for gene, terms in sketch.go_bp_table.items()
        }
    )


def run_grn(
    sketch: GrnSketch,
    gateway: Gateway,
    cfg: EngineConfig,
    mode: Mode,
    go_table: Optional[GoTable] = None,
    dataset_id: str = "",
) -> tuple[dict[tuple[str, str], float], ReasoningTrace]:
    """Score every TF-gene pair with one call each.

    Pilot mode first computes the GO BP overlap operator and feeds its
    rendering into the prompt. A response whose possibility cannot be
    parsed scores a neutral 0.5 and is flagged; only backend failures
    abort the run.
    """
    table = go_table if go_table is not None else _fallback_go_table(sketch)
    builder = _TraceBuilder("grn", mode.value, dataset_id, cfg, gateway)
    scores: dict[tuple[str, str], float] = {}
    entries: list[dict] = []
    try:
        for idx, pair in enumerate(sketch.pairs):
            if mode is Mode.PILOT:
                overlap = go_overlap(pair.tf, pair.target, table)
                builder.operator_step(
                    "go_overlap",
                    {"tf": pair.tf, "target": pair.target},
                    sorted(overlap.shared_terms),
                    f"GO BP overlap for {pair.tf}->{pair.target}: "
                    f"{overlap.rendered}",
                    f"{len(overlap.shared_terms)} shared terms",
                )
                bindings: dict[str, object] = {
                    "few_shot_block": sketch.few_shot_block,
                    "tf": pair.tf,
                    "gene": pair.target,
                    "ctxA": sketch.tissue_a,
                    "ctxB": sketch.tissue_b,
                    "overlap": overlap.rendered,
                }
                stage = PromptStage.GRN_PILOT
                tag = f"grn.pilot.{idx}"
            else:
                bindings = {
                    "tf": pair.tf,
                    "gene": pair.target,
                    "ctxB": sketch.tissue_b,
                }
                stage = PromptStage.GRN_DIRECT
                tag = f"grn.direct.{idx}"

            text = builder.llm_step(tag, stage, bindings)
            flagged = False
            try:
                value = extract_possibility(text)
                builder.set_delta(f"possibility {value}")
            except ExtractionError as exc:
                value = 0.5
                flagged = True
                builder.set_delta(
                    f"possibility unparseable ({type(exc).__name__}); "
                    "neutral 0.5 recorded"
                )
            scores[(pair.tf, pair.target)] = value
            entries.append(
                {
                    "tf": pair.tf,
                    "target": pair.target,
                    "score": value,
                    "flagged": flagged,
                }
            )
    except Exception as exc:
        builder.abort(exc, prediction={"scores": entries})
        raise

    trace = builder.complete({"scores": entries})
    return scores, trace
