"""Sketch schema loading, serialization round-trips, and invariant
validation codes."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchbench.errors import InvariantError, ParseError, SchemaError
from sketchbench.sketches import (
    ABSENT,
    MAX_GRN_PAIRS,
    REDACTED_CONTEXT,
    SUPPORTED_MARKER_K,
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
    to_json_dict,
    validate,
)


def codes(sketch) -> set[str]:
    return {v.code for v in validate(sketch)}


def make_stats(table):
    return ClusterGeneStats(
        {
            cid: {gene: GeneStat(*pair) for gene, pair in genes.items()}
            for cid, genes in table.items()
        }
    )


def clean_annotation(**overrides) -> AnnotationSketch:
    base = dict(
        context="peripheral blood",
        clusters=(
            ClusterSummary(0, ("CD3D", "CD3E", "IL7R", "CCR7", "LTB")),
            ClusterSummary(1, ("CD14", "LYZ", "S100A8", "S100A9", "FCN1")),
        ),
        cluster_count=2,
        expression_stats=make_stats(
            {
                0: {"CD3D": (1.2, 0.8), "CD14": (0.0, 0.0)},
                1: {"CD14": (2.0, 0.9), "CD3D": (0.05, 0.02)},
            }
        ),
        reference_hints={"CD3D": ("T cells",)},
        marker_k=5,
    )
    base.update(overrides)
    return AnnotationSketch(**base)


def clean_trajectory(**overrides) -> TrajectorySketch:
    base = dict(
        context="fetal liver",
        clusters=(
            ClusterSummary(0, ("Alb", "Afp", "Ttr", "Apoa1", "Fgb")),
            ClusterSummary(1, ("Spi1", "Ptprc", "Cd34", "Kit", "Flt3")),
        ),
        timepoint_percentages={
            0: {"E10.5": 0.5, "E12.5": 0.5},
            1: {"E10.5": 0.25, "E12.5": 0.75},
        },
        monocle_report=(
            "clusters: 2; edges: 1\nedges:\n  A -> B\npseudotime_order:\n  A < B"
        ),
    )
    base.update(overrides)
    return TrajectorySketch(**base)


def clean_grn(**overrides) -> GrnSketch:
    base = dict(
        pairs=(
            GrnQuestion("Stat1", "Irf7", 1),
            GrnQuestion("Gata4", "Gzma", 0),
        ),
        tissue_a="adult stomach",
        tissue_b="fetal stomach",
        go_bp_table={"STAT1": frozenset({"GO:0051607"}), "IRF7": frozenset({"GO:0051607"})},
        few_shot_block="Example: ...",
    )
    base.update(overrides)
    return GrnSketch(**base)


# ------------------------------------------------------------ fixture files


@pytest.mark.parametrize(
    "name,kind",
    [
        ("pbmc3k.annotation.json", TaskKind.ANNOTATION),
        ("liver.trajectory.json", TaskKind.TRAJECTORY),
        ("stomach.grn.json", TaskKind.GRN_PREDICTION),
    ],
)
def test_committed_sketches_load_clean(data_dir, name, kind):
    sketch = load_sketch(data_dir / "sketches" / name)
    assert sketch.kind is kind
    assert validate(sketch) == []


@pytest.mark.parametrize(
    "name", ["pbmc3k.annotation.json", "liver.trajectory.json", "stomach.grn.json"]
)
def test_round_trip_committed(data_dir, tmp_path, name):
    sketch = load_sketch(data_dir / "sketches" / name)
    save_sketch(sketch, tmp_path / name)
    assert load_sketch(tmp_path / name) == sketch


def test_round_trip_synthetic(tmp_path):
    for sketch in (clean_annotation(), clean_trajectory(), clean_grn()):
        path = tmp_path / "s.json"
        save_sketch(sketch, path)
        assert load_sketch(path) == sketch


def test_serialize_is_stable_json():
    text = serialize(clean_grn())
    assert text.endswith("\n")
    payload = json.loads(text)
    assert payload["schema_version"] == "1"
    assert payload["kind"] == "grn"


# ------------------------------------------------------------- schema errors


def test_load_rejects_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ParseError):
        load_sketch(path)


def write_payload(tmp_path, payload):
    path = tmp_path / "sketch.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_load_rejects_wrong_version(tmp_path):
    payload = to_json_dict(clean_grn())
    payload["schema_version"] = "2"
    with pytest.raises(SchemaError) as info:
        load_sketch(write_payload(tmp_path, payload))
    assert info.value.path == "$.schema_version"


def test_load_rejects_unknown_kind(tmp_path):
    payload = to_json_dict(clean_grn())
    payload["kind"] = "proteomics"
    with pytest.raises(SchemaError):
        load_sketch(write_payload(tmp_path, payload))


def test_load_rejects_missing_field(tmp_path):
    payload = to_json_dict(clean_annotation())
    del payload["context"]
    with pytest.raises(SchemaError) as info:
        load_sketch(write_payload(tmp_path, payload))
    assert info.value.path == "$.context"


def test_load_rejects_bool_where_int_expected(tmp_path):
    payload = to_json_dict(clean_annotation())
    payload["cluster_count"] = True
    with pytest.raises(SchemaError):
        load_sketch(write_payload(tmp_path, payload))


def test_load_rejects_bad_grn_label(tmp_path):
    payload = to_json_dict(clean_grn())
    payload["pairs"][0]["label"] = 2
    with pytest.raises(SchemaError):
        load_sketch(write_payload(tmp_path, payload))


def test_load_rejects_violating_sketch(tmp_path):
    payload = to_json_dict(clean_annotation(cluster_count=5))
    with pytest.raises(InvariantError) as info:
        load_sketch(write_payload(tmp_path, payload))
    assert "CLUSTER_COUNT_MISMATCH" in str(info.value)


def test_top_level_must_be_object(tmp_path):
    path = tmp_path / "arr.json"
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_sketch(path)


# --------------------------------------------------------- validation codes


def test_clean_fixtures_have_no_violations():
    assert validate(clean_annotation()) == []
    assert validate(clean_trajectory()) == []
    assert validate(clean_grn()) == []


def test_marker_k_unsupported():
    assert SUPPORTED_MARKER_K == (5, 10, 20)
    bad = clean_annotation(marker_k=7)
    assert "MARKER_K_UNSUPPORTED" in codes(bad)
    # clusters are then also off the new k
    assert "MARKER_COUNT_MISMATCH" in codes(bad)


def test_duplicate_cluster():
    sketch = clean_annotation(
        clusters=(
            ClusterSummary(0, ("A1", "B1", "C1", "D1", "E1")),
            ClusterSummary(0, ("A2", "B2", "C2", "D2", "E2")),
        ),
    )
    assert "DUPLICATE_CLUSTER" in codes(sketch)


def test_duplicate_gene_case_insensitive():
    sketch = clean_annotation(
        clusters=(
            ClusterSummary(0, ("Cd3d", "CD3D", "C1", "D1", "E1")),
            ClusterSummary(1, ("A2", "B2", "C2", "D2", "E2")),
        ),
    )
    assert "DUPLICATE_GENE" in codes(sketch)


def test_empty_gene_symbol():
    sketch = clean_annotation(
        clusters=(
            ClusterSummary(0, ("A1", "", "C1", "D1", "E1")),
            ClusterSummary(1, ("A2", "B2", "C2", "D2", "E2")),
        ),
    )
    assert "EMPTY_GENE_SYMBOL" in codes(sketch)


def test_marker_count_mismatch_and_sparse_exemption():
    short = ClusterSummary(0, ("A1", "B1"))
    sparse = ClusterSummary(0, ("A1", "B1"), sparse=True)
    full = ClusterSummary(1, ("A2", "B2", "C2", "D2", "E2"))
    assert "MARKER_COUNT_MISMATCH" in codes(
        clean_annotation(clusters=(short, full))
    )
    assert "MARKER_COUNT_MISMATCH" not in codes(
        clean_annotation(clusters=(sparse, full))
    )


def test_noncontiguous_cluster_ids():
    sketch = clean_annotation(
        clusters=(
            ClusterSummary(0, ("A1", "B1", "C1", "D1", "E1")),
            ClusterSummary(2, ("A2", "B2", "C2", "D2", "E2")),
        ),
    )
    assert "NONCONTIGUOUS_CLUSTER_IDS" in codes(sketch)


def test_cluster_count_mismatch():
    assert "CLUSTER_COUNT_MISMATCH" in codes(clean_annotation(cluster_count=3))


def test_missing_stats():
    sketch = clean_annotation(
        expression_stats=make_stats({0: {"CD3D": (1.0, 0.5)}})
    )
    assert "MISSING_STATS" in codes(sketch)


def test_negative_expression_and_fraction_range():
    sketch = clean_annotation(
        expression_stats=make_stats(
            {
                0: {"CD3D": (-0.1, 0.5)},
                1: {"CD14": (1.0, 1.5)},
            }
        )
    )
    found = codes(sketch)
    assert "NEGATIVE_EXPRESSION" in found
    assert "FRACTION_RANGE" in found


def test_trajectory_marker_count_is_five():
    sketch = clean_trajectory(
        clusters=(
            ClusterSummary(0, ("Alb", "Afp", "Ttr")),
            ClusterSummary(1, ("Spi1", "Ptprc", "Cd34", "Kit", "Flt3")),
        ),
    )
    assert "MARKER_COUNT_MISMATCH" in codes(sketch)


def test_missing_timepoints():
    sketch = clean_trajectory(timepoint_percentages={0: {"E10.5": 1.0}})
    assert "MISSING_TIMEPOINTS" in codes(sketch)


def test_timepoint_sum_tolerance():
    off = clean_trajectory(
        timepoint_percentages={
            0: {"E10.5": 0.5, "E12.5": 0.4999},
            1: {"E10.5": 1.0},
        }
    )
    assert "TIMEPOINT_SUM" in codes(off)
    within = clean_trajectory(
        timepoint_percentages={
            0: {"E10.5": 0.5, "E12.5": 0.5 + 5e-7},
            1: {"E10.5": 1.0},
        }
    )
    assert "TIMEPOINT_SUM" not in codes(within)


def test_timepoint_fraction_range():
    sketch = clean_trajectory(
        timepoint_percentages={
            0: {"E10.5": 1.2, "E12.5": -0.2},
            1: {"E10.5": 1.0},
        }
    )
    assert "FRACTION_RANGE" in codes(sketch)


def test_too_many_pairs():
    assert MAX_GRN_PAIRS == 300
    pairs = tuple(
        GrnQuestion(f"Tf{i}", f"Gene{i}", 1 if i % 2 else 0)
        for i in range(MAX_GRN_PAIRS + 1)
    )
    assert "TOO_MANY_PAIRS" in codes(clean_grn(pairs=pairs))


def test_partial_labels():
    pairs = (GrnQuestion("Stat1", "Irf7", 1), GrnQuestion("Gata4", "Gzma", None))
    assert "PARTIAL_LABELS" in codes(clean_grn(pairs=pairs))
    unlabeled = (GrnQuestion("Stat1", "Irf7"), GrnQuestion("Gata4", "Gzma"))
    assert "PARTIAL_LABELS" not in codes(clean_grn(pairs=unlabeled))


def test_self_regulation_case_insensitive():
    pairs = (GrnQuestion("Stat1", "STAT1", 1), GrnQuestion("Gata4", "Gzma", 0))
    assert "SELF_REGULATION_PAIR" in codes(clean_grn(pairs=pairs))


def test_empty_pair_symbol():
    pairs = (GrnQuestion("", "Irf7", 1), GrnQuestion("Gata4", "Gzma", 0))
    assert "EMPTY_GENE_SYMBOL" in codes(clean_grn(pairs=pairs))


def test_lowercase_go_key():
    sketch = clean_grn(go_bp_table={"Stat1": frozenset({"GO:0051607"})})
    assert "LOWERCASE_GO_KEY" in codes(sketch)


def test_validate_rejects_non_sketch():
    with pytest.raises(TypeError):
        validate({"kind": "annotation"})


# ----------------------------------------------------------------- redaction


def test_redact_metadata():
    sketch = clean_annotation()
    redacted = redact_metadata(sketch)
    assert redacted.context == REDACTED_CONTEXT
    assert redacted.clusters == sketch.clusters
    # idempotent, and a no-op returns the same object
    assert redact_metadata(redacted) is redacted


# ---------------------------------------------------------------- gene stats


def test_gene_stats_lookup_case_insensitive():
    stats = make_stats({0: {"Cd3d": (1.0, 0.5)}})
    assert stats.lookup(0, "CD3D") == GeneStat(1.0, 0.5)
    assert stats.lookup(0, "cd3d") == GeneStat(1.0, 0.5)
    assert stats.lookup(0, "GZMB") is ABSENT
    assert stats.lookup(9, "CD3D") is ABSENT
    assert stats.genes_for(0) == ["Cd3d"]  # verbatim spelling kept


def test_task_query_guard():
    with pytest.raises(InvariantError):
        TaskQuery(TaskKind.ANNOTATION, "", Mode.PILOT)


# --------------------------------------------------------------- properties


gene_symbols = st.text(
    alphabet=st.sampled_from("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"),
    min_size=1,
    max_size=8,
)


@st.composite
def annotation_sketches(draw):
    marker_k = draw(st.sampled_from(SUPPORTED_MARKER_K))
    n_clusters = draw(st.integers(1, 4))
    clusters = []
    stats_table = {}
    for cid in range(n_clusters):
        genes = draw(
            st.lists(gene_symbols, min_size=marker_k, max_size=marker_k, unique=True)
        )
        clusters.append(ClusterSummary(cid, tuple(genes)))
        stats_table[cid] = {
            gene: (
                draw(st.floats(0, 5, allow_nan=False)),
                draw(st.floats(0, 1, allow_nan=False)),
            )
            for gene in genes[:2]
        }
    return AnnotationSketch(
        context=draw(st.text(max_size=20)),
        clusters=tuple(clusters),
        cluster_count=n_clusters,
        expression_stats=make_stats(stats_table),
        reference_hints=None,
        marker_k=marker_k,
    )


@given(sketch=annotation_sketches())
@settings(max_examples=40, deadline=None)
def test_generated_sketches_round_trip(sketch, tmp_path_factory):
    path = tmp_path_factory.mktemp("sketches") / "generated.json"
    violations = validate(sketch)
    # uppercase-unique symbols per cluster are not guaranteed by the
    # strategy; skip those draws rather than weaken the assertion
    if any(v.code == "DUPLICATE_GENE" for v in violations):
        return
    assert violations == []
    save_sketch(sketch, path)
    assert load_sketch(path) == sketch
