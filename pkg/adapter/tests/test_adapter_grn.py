"""GRN sketch builder tests against exports derived from the committed set."""

import pytest

import synth
from sketchbench.sketches import GrnSketch, load_sketch, validate
from sketchingest.errors import InputFormatError, InsufficientNegativePool
from sketchingest.grn import make_grn_sketch, read_go_table, read_grndb, read_trrust
from sketchingest.io import write_sketch


@pytest.fixture(scope="module")
def stomach(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("grn")
    paths = synth.stomach_grn_inputs(tmp)
    sketch = make_grn_sketch(
        paths["grndb"], paths["trrust"], paths["go"], "stomach", seed=0
    )
    return paths, sketch


class TestStomachBuild:
    def test_question_count_balance_and_tfs(self, stomach):
        _, sketch = stomach
        pairs = sketch["pairs"]
        assert len(pairs) == 46
        assert sum(p["label"] for p in pairs) == 23
        assert [p["label"] for p in pairs] == [1] * 23 + [0] * 23
        assert len({p["tf"] for p in pairs}) == 10

    def test_tf_set_matches_committed_sketch(self, stomach):
        _, sketch = stomach
        committed = synth.committed_stomach_sketch()
        assert {p["tf"] for p in sketch["pairs"]} == {
            p["tf"] for p in committed["pairs"]
        }

    def test_positives_match_committed_sketch(self, stomach):
        _, sketch = stomach
        committed = synth.committed_stomach_sketch()
        mine = [p for p in sketch["pairs"] if p["label"] == 1]
        theirs = [p for p in committed["pairs"] if p["label"] == 1]
        assert mine == theirs

    def test_negatives_respect_exclusions(self, stomach):
        paths, sketch = stomach
        scenic = {
            (tf.upper(), tg.upper()) for tf, tg, _ in read_grndb(paths["grndb"])
        }
        trrust = {
            (tf.upper(), tg.upper()) for tf, tg in read_trrust(paths["trrust"])
        }
        negatives = [p for p in sketch["pairs"] if p["label"] == 0]
        keys = [(p["tf"].upper(), p["target"].upper()) for p in negatives]
        assert len(set(keys)) == len(keys)
        for key in keys:
            assert key not in scenic
            assert key not in trrust
            assert key[0] != key[1]

    def test_same_seed_reproduces_sample(self, stomach):
        paths, sketch = stomach
        again = make_grn_sketch(
            paths["grndb"], paths["trrust"], paths["go"], "stomach", seed=0
        )
        assert again == sketch

    def test_other_seed_changes_sample(self, stomach):
        paths, sketch = stomach
        other = make_grn_sketch(
            paths["grndb"], paths["trrust"], paths["go"], "stomach", seed=7
        )
        assert other != sketch
        positives = [p for p in sketch["pairs"] if p["label"] == 1]
        assert [p for p in other["pairs"] if p["label"] == 1] == positives

    def test_fully_excluded_decoys_never_sampled(self, stomach):
        paths, _ = stomach
        for seed in range(20):
            sketch = make_grn_sketch(
                paths["grndb"], paths["trrust"], paths["go"], "stomach", seed=seed
            )
            sampled = {p["target"] for p in sketch["pairs"] if p["label"] == 0}
            assert "Actb" not in sampled
            assert "Gapdh" not in sampled

    def test_go_table_restricted_to_involved_genes(self, stomach):
        paths, sketch = stomach
        table = sketch["go_bp_table"]
        involved = {p["tf"].upper() for p in sketch["pairs"]} | {
            p["target"].upper() for p in sketch["pairs"]
        }
        full = read_go_table(paths["go"])
        assert set(table) == {g for g in involved if g in full}
        assert all(key == key.upper() for key in table)
        # the decoy has a GO row but is never an involved gene
        assert "ACTB" not in table
        committed = synth.committed_stomach_sketch()["go_bp_table"]
        for gene, terms in table.items():
            if gene in committed:
                assert terms == committed[gene]

    def test_few_shot_and_tissue_labels(self, stomach):
        _, sketch = stomach
        committed = synth.committed_stomach_sketch()
        assert sketch["few_shot_block"] == committed["few_shot_block"]
        assert sketch["tissue_a"] == "adult stomach"
        assert sketch["tissue_b"] == "fetal stomach"

    def test_custom_few_shot_used_verbatim(self, stomach):
        paths, _ = stomach
        sketch = make_grn_sketch(
            paths["grndb"], paths["trrust"], paths["go"], "stomach",
            few_shot="Worked example goes here.\n",
        )
        assert sketch["few_shot_block"] == "Worked example goes here.\n"

    def test_validator_accepts_output(self, stomach, tmp_path):
        _, sketch = stomach
        out = write_sketch(sketch, tmp_path / "stomach.grn.json")
        loaded = load_sketch(out)
        assert isinstance(loaded, GrnSketch)
        assert validate(loaded) == []


class TestOtherInputs:
    def test_liver_shaped_inputs(self, tmp_path):
        paths = synth.liver_grn_inputs(tmp_path)
        sketch = make_grn_sketch(
            paths["grndb"], paths["trrust"], paths["go"], "liver", seed=0
        )
        assert len(sketch["pairs"]) == 142
        assert sum(p["label"] for p in sketch["pairs"]) == 71
        assert len({p["tf"] for p in sketch["pairs"]}) == 21

    def test_unknown_tissue_rejected(self, stomach):
        paths, _ = stomach
        with pytest.raises(InputFormatError, match="no verified edges"):
            make_grn_sketch(
                paths["grndb"], paths["trrust"], paths["go"], "kidney"
            )

    def test_insufficient_negative_pool(self, tmp_path):
        grndb = tmp_path / "g.csv"
        grndb.write_text("tf,target,tissue\nTfa,G1,gut\n")
        trrust = tmp_path / "t.tsv"
        trrust.write_text("Tfa\tG1\tActivation\t1\n")
        go = tmp_path / "go.tsv"
        go.write_text("G1\tGO:0008150\n")
        with pytest.raises(InsufficientNegativePool, match="Tfa"):
            make_grn_sketch(grndb, trrust, go, "gut")

    def test_self_regulation_edge_skipped(self, tmp_path):
        grndb = tmp_path / "g.csv"
        grndb.write_text(
            "tf,target,tissue\nTfa,Tfa,gut\nTfa,G1,gut\nZzz,Pool1,brain\n"
        )
        trrust = tmp_path / "t.tsv"
        trrust.write_text("Tfa\tTfa\tActivation\t1\nTfa\tG1\tActivation\t1\n")
        go = tmp_path / "go.tsv"
        go.write_text("G1\tGO:0008150\n")
        with pytest.warns(UserWarning, match="self-regulation"):
            sketch = make_grn_sketch(grndb, trrust, go, "gut")
        assert [p["label"] for p in sketch["pairs"]] == [1, 0]
        assert {"tf": "Tfa", "target": "Tfa", "label": 1} not in sketch["pairs"]

    def test_too_many_positives_rejected(self, tmp_path):
        rows = ["tf,target,tissue"]
        trrust_rows = []
        for i in range(151):
            rows.append(f"Tf{i:03d},G{i:03d},gut")
            trrust_rows.append(f"Tf{i:03d}\tG{i:03d}\tActivation\t1")
        (tmp_path / "g.csv").write_text("\n".join(rows) + "\n")
        (tmp_path / "t.tsv").write_text("\n".join(trrust_rows) + "\n")
        (tmp_path / "go.tsv").write_text("G000\tGO:0008150\n")
        with pytest.raises(InputFormatError, match="exceed"):
            make_grn_sketch(
                tmp_path / "g.csv", tmp_path / "t.tsv", tmp_path / "go.tsv", "gut"
            )

    def test_grndb_header_checked(self, tmp_path):
        (tmp_path / "bad.csv").write_text("regulator,gene\nA,B\n")
        with pytest.raises(InputFormatError, match="expected columns"):
            read_grndb(tmp_path / "bad.csv")

    def test_trrust_rows_checked(self, tmp_path):
        (tmp_path / "bad.tsv").write_text("OnlyOneField\n")
        with pytest.raises(InputFormatError, match="bad row on line 1"):
            read_trrust(tmp_path / "bad.tsv")

    def test_go_comments_and_case_folding(self, tmp_path):
        go = tmp_path / "go.tsv"
        go.write_text("# gene\tterm\tname\nagr2\tGO:0070254\tmucus secretion\n")
        assert read_go_table(go) == {"AGR2": {"GO:0070254"}}
