"""Benchmark engine for iterative LLM reasoning over compressed
single-cell evidence ("semantic sketches"): cell-type annotation,
trajectory inference, and TF-gene regulation scoring, with a
deterministic replay backend and a full metric suite."""

from .bench import (
    Ablation,
    BenchFragment,
    DatasetEntry,
    Registry,
    grade_prediction,
    load_registry,
    report,
    run_ablation,
    run_bench,
    summarize_costs,
)
from .engine import (
    EngineConfig,
    ReasoningTrace,
    TraceStep,
    load_trace,
    run_annotation_direct,
    run_annotation_pilot,
    run_grn,
    run_trajectory_direct,
    run_trajectory_pilot,
    save_trace,
)
from .gateway import (
    ChatRequest,
    ChatResponse,
    CostLedger,
    Gateway,
    HttpBackend,
    ReplayBackend,
    ReplayScript,
    RetryPolicy,
    TokenBucket,
    content_fingerprint,
    estimate_tokens,
)
from .sketches import (
    SCHEMA_VERSION,
    AnnotationSketch,
    ClusterGeneStats,
    ClusterSummary,
    GeneStat,
    GrnQuestion,
    GrnSketch,
    Mode,
    TaskKind,
    TaskQuery,
    TrajectorySketch,
    load_sketch,
    redact_metadata,
    save_sketch,
    serialize,
    validate,
)

__version__ = "0.1.0"
