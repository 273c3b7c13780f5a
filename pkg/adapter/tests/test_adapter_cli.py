"""End-to-end tests for the three console entry points."""

import json

import pytest

import synth
from sketchbench.sketches import load_sketch
from sketchingest.cli import annotation_main, grn_main, trajectory_main

SIDECAR_TEXT = "Synthetic CLI fixture, eight engineered populations."


@pytest.fixture(scope="module")
def pbmc_file(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli_pbmc")
    path = tmp / "blobs.h5ad"
    synth.pbmc_like(path)
    (tmp / "blobs.context.txt").write_text(SIDECAR_TEXT + "\n")
    return path


@pytest.fixture(scope="module")
def pancreas_file(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli_pancreas")
    path = tmp / "series.h5ad"
    synth.pancreas_like(path)
    (tmp / "series.context.txt").write_text("Developmental series fixture.\n")
    return path


@pytest.fixture(scope="module")
def grn_files(tmp_path_factory):
    return synth.stomach_grn_inputs(tmp_path_factory.mktemp("cli_grn"))


class TestAnnotationCommand:
    def test_writes_sketch(self, pbmc_file, tmp_path, capsys):
        out = tmp_path / "blobs.annotation.json"
        rc = annotation_main(
            [str(pbmc_file), "--dataset", "pbmc3k", "--out", str(out)]
        )
        assert rc == 0
        captured = capsys.readouterr()
        assert "wrote" in captured.out
        assert "8 clusters" in captured.out
        sketch = load_sketch(out)
        assert sketch.cluster_count == 8

    def test_refuses_overwrite_without_force(self, pbmc_file, tmp_path, capsys):
        out = tmp_path / "blobs.annotation.json"
        out.write_text("{}")
        rc = annotation_main(
            [str(pbmc_file), "--dataset", "pbmc3k", "--out", str(out)]
        )
        captured = capsys.readouterr()
        assert rc == 2
        assert "pass --force to overwrite" in captured.err
        assert out.read_text() == "{}"
        rc = annotation_main(
            [str(pbmc_file), "--dataset", "pbmc3k", "--out", str(out), "--force"]
        )
        assert rc == 0
        assert load_sketch(out).cluster_count == 8

    def test_default_out_dir(self, pbmc_file, tmp_path, monkeypatch, capsys):
        monkeypatch.chdir(tmp_path)
        rc = annotation_main([str(pbmc_file), "--dataset", "pbmc3k"])
        assert rc == 0
        expected = tmp_path / "data" / "sketches" / "blobs.annotation.json"
        assert expected.exists()
        assert "blobs.annotation.json" in capsys.readouterr().out

    def test_hvg_all_recorded_in_context(self, pbmc_file, tmp_path):
        out = tmp_path / "all.annotation.json"
        rc = annotation_main(
            [
                str(pbmc_file), "--dataset", "pbmc3k",
                "--hvg", "all", "--out", str(out),
            ]
        )
        assert rc == 0
        assert "all 120 genes" in json.loads(out.read_text())["context"]

    def test_bad_hvg_rejected(self, pbmc_file, tmp_path, capsys):
        rc = annotation_main(
            [
                str(pbmc_file), "--dataset", "pbmc3k",
                "--hvg", "lots", "--out", str(tmp_path / "x.json"),
            ]
        )
        assert rc == 2
        assert "--hvg takes an integer or 'all'" in capsys.readouterr().err

    def test_bad_marker_count_rejected(self, pbmc_file, tmp_path, capsys):
        rc = annotation_main(
            [
                str(pbmc_file), "--dataset", "pbmc3k",
                "--k", "7", "--out", str(tmp_path / "x.json"),
            ]
        )
        assert rc == 2
        assert "marker list length 7" in capsys.readouterr().err

    def test_missing_resolution_rejected(self, pbmc_file, tmp_path, capsys):
        rc = annotation_main([str(pbmc_file), "--out", str(tmp_path / "x.json")])
        assert rc == 2
        assert "resolution" in capsys.readouterr().err


class TestTrajectoryCommand:
    def test_writes_sketch(self, pancreas_file, tmp_path, capsys):
        out = tmp_path / "series.trajectory.json"
        rc = trajectory_main(
            [str(pancreas_file), "--dataset", "pancreas_e12_e15", "--out", str(out)]
        )
        assert rc == 0
        captured = capsys.readouterr()
        assert "wrote" in captured.out
        assert "4 timepoints" in captured.out
        sketch = load_sketch(out)
        assert sketch.monocle_report.startswith("clusters:")

    def test_missing_timepoint_column(self, pbmc_file, tmp_path, capsys):
        rc = trajectory_main(
            [str(pbmc_file), "--dataset", "pbmc3k", "--out", str(tmp_path / "x.json")]
        )
        assert rc == 2
        assert "'timepoint'" in capsys.readouterr().err


class TestGrnCommand:
    def test_writes_sketch(self, grn_files, tmp_path, capsys):
        out = tmp_path / "stomach.grn.json"
        rc = grn_main(
            [
                "--grndb", str(grn_files["grndb"]),
                "--trrust", str(grn_files["trrust"]),
                "--go", str(grn_files["go"]),
                "--tissue", "stomach",
                "--out", str(out),
            ]
        )
        assert rc == 0
        assert "46 questions, 10 TFs" in capsys.readouterr().out
        assert len(load_sketch(out).pairs) == 46

    def test_few_shot_file_override(self, grn_files, tmp_path):
        example = tmp_path / "example.txt"
        example.write_text("Worked example.\n\n")
        out = tmp_path / "stomach.grn.json"
        rc = grn_main(
            [
                "--grndb", str(grn_files["grndb"]),
                "--trrust", str(grn_files["trrust"]),
                "--go", str(grn_files["go"]),
                "--tissue", "stomach",
                "--few-shot-file", str(example),
                "--out", str(out),
            ]
        )
        assert rc == 0
        assert json.loads(out.read_text())["few_shot_block"] == "Worked example.\n\n"

    def test_missing_few_shot_file(self, grn_files, tmp_path, capsys):
        rc = grn_main(
            [
                "--grndb", str(grn_files["grndb"]),
                "--trrust", str(grn_files["trrust"]),
                "--go", str(grn_files["go"]),
                "--tissue", "stomach",
                "--few-shot-file", str(tmp_path / "absent.txt"),
                "--out", str(tmp_path / "x.json"),
            ]
        )
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_unknown_tissue(self, grn_files, tmp_path, capsys):
        rc = grn_main(
            [
                "--grndb", str(grn_files["grndb"]),
                "--trrust", str(grn_files["trrust"]),
                "--go", str(grn_files["go"]),
                "--tissue", "kidney",
                "--out", str(tmp_path / "x.json"),
            ]
        )
        assert rc == 2
        assert "no verified edges" in capsys.readouterr().err
