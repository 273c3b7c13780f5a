"""End-to-end tests for the command line entry points, driven through
main() with replay backends so no network is involved."""

from __future__ import annotations

import json

import pytest

from conftest import DATA_DIR
from sketchbench.cli import main

PBMC_GRADE_ARGS = [
    "--truth", str(DATA_DIR / "truth/pbmc3k.labels.csv"),
    "--task", "annotation",
    "--ontology", str(DATA_DIR / "ontology/cl_fixture.obo"),
    "--synonyms", str(DATA_DIR / "ontology/cell_synonyms.tsv"),
]


def run_pbmc(tmp_path, repeats="1", extra=()):
    trace_dir = tmp_path / "traces"
    out_dir = tmp_path / "out"
    code = main(
        [
            "run",
            "--dataset", "pbmc3k",
            "--repeats", repeats,
            "--trace-dir", str(trace_dir),
            "--out", str(out_dir),
            *extra,
        ]
    )
    return code, trace_dir, out_dir


# ---------------------------------------------------------------------- run


class TestRun:
    def test_replay_pilot_succeeds(self, tmp_path, capsys):
        code, trace_dir, out_dir = run_pbmc(tmp_path, repeats="2")
        captured = capsys.readouterr()
        assert code == 0
        assert captured.out.startswith("dataset")
        assert "accuracy=0.8750±0.0000" in captured.out
        assert "2/2" in captured.out
        assert f"report written to {out_dir}" in captured.out
        assert captured.err == ""
        assert (trace_dir / "pbmc3k.pilot.r1.trace.json").is_file()
        assert (trace_dir / "pbmc3k.pilot.r2.trace.json").is_file()
        for name in ("bench_report.csv", "bench_report.txt", "cost.csv"):
            assert (out_dir / name).is_file()

    def test_direct_mode_with_explicit_script(self, tmp_path, capsys):
        code, _, _ = run_pbmc(
            tmp_path,
            extra=[
                "--mode", "direct",
                "--script", str(DATA_DIR / "replay/pbmc3k.direct.json"),
            ],
        )
        assert code == 0
        assert "accuracy=0.7500±0.0000" in capsys.readouterr().out

    def test_mode_script_mismatch_exits_3(self, tmp_path, capsys):
        # default script replays the pilot dialogue, not the direct one
        code, _, _ = run_pbmc(tmp_path, extra=["--mode", "direct"])
        captured = capsys.readouterr()
        assert code == 3
        assert "0/1" in captured.out
        assert "repeat 1 FAILED: ReplayMismatch" in captured.err

    def test_unknown_dataset_exits_2(self, tmp_path, capsys):
        code = main(
            ["run", "--dataset", "kidney", "--out", str(tmp_path / "out")]
        )
        assert code == 2
        err = capsys.readouterr().err
        assert "input error" in err and "kidney" in err

    def test_zero_repeats_exits_2(self, tmp_path, capsys):
        code, _, _ = run_pbmc(tmp_path, repeats="0")
        assert code == 2
        assert "repeats must be >= 1" in capsys.readouterr().err

    def test_live_backend_needs_endpoint(self, tmp_path, capsys):
        code, _, _ = run_pbmc(tmp_path, extra=["--backend", "live"])
        assert code == 2
        assert "needs --endpoint" in capsys.readouterr().err

    def test_replay_needs_some_script(self, tmp_path, repo_root, capsys):
        registry = {
            "datasets": [
                {
                    "id": "bare",
                    "task_kind": "annotation",
                    "sketch": str(repo_root / "data/sketches/pbmc3k.annotation.json"),
                    "truth": str(repo_root / "data/truth/pbmc3k.labels.csv"),
                }
            ]
        }
        reg_path = tmp_path / "registry.json"
        reg_path.write_text(json.dumps(registry), encoding="utf-8")
        code = main(
            [
                "run",
                "--dataset", "bare",
                "--registry", str(reg_path),
                "--out", str(tmp_path / "out"),
            ]
        )
        assert code == 2
        assert "no --script" in capsys.readouterr().err

    def test_default_out_dir(self, tmp_path, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        code = main(["run", "--dataset", "pbmc3k", "--repeats", "1"])
        assert code == 0
        assert "report written to bench_out" in capsys.readouterr().out
        assert (tmp_path / "bench_out" / "bench_report.txt").is_file()

    def test_model_flag_flows_into_cost_table(self, tmp_path, capsys):
        code, _, out_dir = run_pbmc(tmp_path, extra=["--model", "my-model"])
        assert code == 0
        cost = (out_dir / "cost.csv").read_text(encoding="utf-8").splitlines()
        # my-model is not on the rate card so usd stays blank
        assert cost[1] == "pbmc3k,my-model,pilot,,6715,1108,"


# -------------------------------------------------------------------- ablate


class TestAblate:
    def test_goshuffle_breaks_replay_and_exits_3(self, tmp_path, capsys):
        code = main(
            [
                "ablate",
                "--kind", "goshuffle",
                "--dataset", "stomach",
                "--repeats", "1",
                "--out", str(tmp_path / "out"),
            ]
        )
        captured = capsys.readouterr()
        assert code == 3
        assert "0/1" in captured.out
        assert "goshuffle[s0]" in captured.out
        assert "fingerprint" in captured.err

    def test_incompatible_kind_exits_2(self, tmp_path, capsys):
        code = main(
            [
                "ablate",
                "--kind", "monocle",
                "--dataset", "pbmc3k",
                "--out", str(tmp_path / "out"),
            ]
        )
        assert code == 2
        assert "applies to trajectory" in capsys.readouterr().err

    def test_unknown_kind_rejected_by_parser(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["ablate", "--kind", "dropout", "--dataset", "pbmc3k"])
        assert exc.value.code == 2
        assert "invalid choice" in capsys.readouterr().err


# --------------------------------------------------------------------- grade


class TestGrade:
    def test_grade_persisted_trace(self, tmp_path, capsys):
        code, trace_dir, _ = run_pbmc(tmp_path)
        assert code == 0
        capsys.readouterr()
        code = main(
            [
                "grade",
                "--pred", str(trace_dir / "pbmc3k.pilot.r1.trace.json"),
                *PBMC_GRADE_ARGS,
            ]
        )
        assert code == 0
        assert capsys.readouterr().out == "accuracy: 0.875000\n"

    def test_grade_bare_prediction_file(self, tmp_path, repo_root, capsys):
        truth_path = repo_root / "data/truth/liver.tree.json"
        pred_path = tmp_path / "pred.json"
        pred_path.write_text(
            json.dumps({"tree": json.loads(truth_path.read_text(encoding="utf-8"))}),
            encoding="utf-8",
        )
        code = main(
            [
                "grade",
                "--pred", str(pred_path),
                "--truth", str(truth_path),
                "--task", "trajectory",
            ]
        )
        assert code == 0
        assert capsys.readouterr().out == (
            "ged: 0.000000\n"
            "ged_exact: 1.000000\n"
            "jaccard: 1.000000\n"
            "spectral: 0.000000\n"
        )

    def test_grade_annotation_without_ontology_exits_2(self, tmp_path, capsys):
        pred_path = tmp_path / "pred.json"
        pred_path.write_text(json.dumps({"labels": {}}), encoding="utf-8")
        code = main(
            [
                "grade",
                "--pred", str(pred_path),
                "--truth", str(DATA_DIR / "truth/pbmc3k.labels.csv"),
                "--task", "annotation",
            ]
        )
        assert code == 2
        assert "needs an ontology" in capsys.readouterr().err


# ---------------------------------------------------------------------- cost


class TestCost:
    def test_cost_over_run_directory(self, tmp_path, capsys):
        code, trace_dir, _ = run_pbmc(tmp_path)
        assert code == 0
        capsys.readouterr()
        code = main(["cost", "--run", str(trace_dir)])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split() == ["model", "input_tokens", "output_tokens", "usd"]
        assert lines[1].split() == ["replay-model", "6715", "1108", "0.0195"]

    def test_cost_empty_dir_exits_2(self, tmp_path, capsys):
        code = main(["cost", "--run", str(tmp_path)])
        assert code == 2
        assert "input error" in capsys.readouterr().err
