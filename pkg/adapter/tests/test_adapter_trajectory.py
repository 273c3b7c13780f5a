"""Trajectory sketch builder tests against the lineage-path fixture."""

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

import synth
from sketchbench.sketches import TrajectorySketch, load_sketch, validate
from sketchingest.errors import InputFormatError, MissingTimepointColumn
from sketchingest.io import write_sketch
from sketchingest.report import LineageReport, parse, render
from sketchingest.trajectory import make_trajectory_sketch, timepoint_shares

SIDECAR_TEXT = "Synthetic developmental series over a six-stage lineage path."

STAGES = ["E12.5", "E13.5", "E14.5", "E15.5"]


@pytest.fixture(scope="module")
def pancreas(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("pancreas")
    meta = synth.pancreas_like(tmp / "pancreas.h5ad")
    (tmp / "pancreas.context.txt").write_text(SIDECAR_TEXT + "\n")
    sketch = make_trajectory_sketch(
        tmp / "pancreas.h5ad", dataset_id="pancreas_e12_e15"
    )
    return tmp, meta, sketch


class TestPancreasLikeBuild:
    def test_four_timepoints_covered(self, pancreas):
        _, _, sketch = pancreas
        stages = {
            stage
            for shares in sketch["timepoint_percentages"].values()
            for stage in shares
        }
        assert stages == set(STAGES)
        assert "4 timepoints (E12.5 to E15.5)" in sketch["context"]

    def test_shares_sum_to_one_per_cluster(self, pancreas):
        _, _, sketch = pancreas
        for shares in sketch["timepoint_percentages"].values():
            assert sum(shares.values()) == pytest.approx(1.0, abs=1e-9)
            assert all(0.0 <= v <= 1.0 for v in shares.values())

    def test_stage_keys_listed_in_developmental_order(self, pancreas):
        _, _, sketch = pancreas
        for shares in sketch["timepoint_percentages"].values():
            keys = list(shares)
            assert keys == sorted(keys, key=STAGES.index)

    def test_five_markers_no_cell_counts(self, pancreas):
        _, _, sketch = pancreas
        for cluster in sketch["clusters"]:
            assert len(cluster["top_genes"]) == 5
            assert "cell_count" not in cluster

    def test_report_grammar_and_vocabulary(self, pancreas):
        _, _, sketch = pancreas
        report = parse(sketch["monocle_report"])
        names = {f"cluster {cid}" for cid in range(len(sketch["clusters"]))}
        assert set(report.order) == names
        for src, dst in report.edges:
            assert src in names and dst in names

    def test_connected_fixture_yields_spanning_tree(self, pancreas):
        _, _, sketch = pancreas
        report = parse(sketch["monocle_report"])
        # one connected component: a tree over all six clusters
        assert len(report.edges) == len(report.order) - 1

    def test_order_starts_at_earliest_timepoint_cluster(self, pancreas):
        _, _, sketch = pancreas
        report = parse(sketch["monocle_report"])
        shares = sketch["timepoint_percentages"]
        root = max(shares, key=lambda cid: shares[cid].get("E12.5", 0.0))
        assert report.order[0] == f"cluster {root}"

    def test_validator_accepts_output(self, pancreas, tmp_path):
        _, _, sketch = pancreas
        out = write_sketch(sketch, tmp_path / "pancreas.trajectory.json")
        loaded = load_sketch(out)
        assert isinstance(loaded, TrajectorySketch)
        assert validate(loaded) == []

    def test_rebuild_is_byte_identical(self, pancreas):
        tmp, _, sketch = pancreas
        again = make_trajectory_sketch(
            tmp / "pancreas.h5ad", dataset_id="pancreas_e12_e15"
        )
        assert json.dumps(sketch) == json.dumps(again)

    def test_missing_timepoint_column(self, tmp_path):
        synth.pbmc_like(tmp_path / "no_tp.h5ad")
        with pytest.raises(MissingTimepointColumn, match="'timepoint'"):
            make_trajectory_sketch(tmp_path / "no_tp.h5ad", resolution=1.0)

    def test_missing_custom_timepoint_key(self, pancreas):
        tmp, _, _ = pancreas
        with pytest.raises(MissingTimepointColumn, match="'stage'"):
            make_trajectory_sketch(
                tmp / "pancreas.h5ad",
                dataset_id="pancreas_e12_e15",
                timepoint_key="stage",
            )


class TestTimepointShares:
    @given(
        st.dictionaries(
            st.text(alphabet="E0123456789.ab", min_size=1, max_size=6),
            st.integers(min_value=0, max_value=500),
            min_size=1,
        ).filter(lambda counts: any(v > 0 for v in counts.values()))
    )
    def test_shares_always_sum_to_one(self, counts):
        shares = timepoint_shares(counts)
        assert set(shares) == {k for k, v in counts.items() if v > 0}
        assert sum(shares.values()) == pytest.approx(1.0, abs=1e-9)
        assert all(0.0 <= v <= 1.0 for v in shares.values())

    def test_thirds_balance_exactly(self):
        shares = timepoint_shares({"a": 1, "b": 1, "c": 1})
        assert sum(shares.values()) == pytest.approx(1.0, abs=1e-12)
        assert sorted(shares.values()) == [0.3333, 0.3333, 0.3334]


_name = st.text(
    alphabet="abcdefgh 0123456789-", min_size=1, max_size=10
).filter(lambda s: s == s.strip() and s)


@st.composite
def _reports(draw):
    names = draw(st.lists(_name, min_size=1, max_size=8, unique=True))
    n_edges = draw(st.integers(min_value=0, max_value=6))
    edges = tuple(
        (draw(st.sampled_from(names)), draw(st.sampled_from(names)))
        for _ in range(n_edges)
    )
    return LineageReport(edges, tuple(names))


class TestReportRoundTrip:
    @given(_reports())
    def test_render_parse_identity(self, report):
        assert parse(render(report)) == report

    def test_malformed_reports_rejected(self):
        with pytest.raises(InputFormatError, match="bad header"):
            parse("clusters: x; edges: 0\nedges:\npseudotime_order:\n  a")
        with pytest.raises(InputFormatError, match="repeats"):
            parse("clusters: 2; edges: 0\nedges:\npseudotime_order:\n  a < a")
        with pytest.raises(InputFormatError, match="endpoint"):
            parse(
                "clusters: 2; edges: 1\nedges:\n  a -> c\n"
                "pseudotime_order:\n  a < b"
            )
