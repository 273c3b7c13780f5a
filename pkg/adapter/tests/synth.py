"""Synthetic dataset builders for the adapter tests.

Public downloads are not available in the test environment, so each
test writes a small H5AD from scratch with h5py: well-separated
expression blobs whose cluster structure is unambiguous at any
reasonable resolution, plus engineered marker genes per blob.
"""

from __future__ import annotations

import json
from pathlib import Path

import h5py
import numpy as np
from scipy import sparse

REPO_ROOT = Path(__file__).resolve().parents[2]
COMMITTED_STOMACH = REPO_ROOT / "data" / "sketches" / "stomach.grn.json"
COMMITTED_GO_TSV = REPO_ROOT / "data" / "go" / "stomach_go_bp.tsv"


def write_h5ad(
    path,
    matrix: np.ndarray,
    gene_names,
    cell_names,
    obs_columns=None,
    sparse_x=False,
    categorical_obs=(),
) -> Path:
    """Write the minimal H5AD subset the adapter reads."""
    path = Path(path)
    with h5py.File(path, "w") as f:
        if sparse_x:
            csr = sparse.csr_matrix(matrix)
            group = f.create_group("X")
            group.attrs["encoding-type"] = "csr_matrix"
            group.attrs["shape"] = np.array(matrix.shape, dtype=np.int64)
            group.create_dataset("data", data=csr.data)
            group.create_dataset("indices", data=csr.indices)
            group.create_dataset("indptr", data=csr.indptr)
        else:
            f.create_dataset("X", data=np.asarray(matrix, dtype=np.float64))

        obs = f.create_group("obs")
        obs.attrs["_index"] = "_index"
        obs.create_dataset(
            "_index", data=np.array(cell_names, dtype="S")
        )
        for key, values in (obs_columns or {}).items():
            values = np.asarray(values)
            if key in categorical_obs:
                cats = sorted(set(str(v) for v in values))
                codes = np.array([cats.index(str(v)) for v in values], dtype="i8")
                col = obs.create_group(key)
                col.create_dataset("codes", data=codes)
                col.create_dataset("categories", data=np.array(cats, dtype="S"))
            elif values.dtype.kind in ("U", "S", "O"):
                obs.create_dataset(key, data=np.array(values, dtype="S"))
            else:
                obs.create_dataset(key, data=values)

        var = f.create_group("var")
        var.attrs["_index"] = "_index"
        var.create_dataset("_index", data=np.array(gene_names, dtype="S"))
    return path


def blob_counts(
    rng: np.random.Generator,
    sizes,
    n_genes: int,
    markers_per_blob: int = 10,
    marker_rate: float = 25.0,
    background_rate: float = 1.0,
):
    """Count matrix with disjoint boosted marker genes per blob."""
    n_cells = sum(sizes)
    matrix = rng.poisson(background_rate, size=(n_cells, n_genes)).astype(float)
    marker_names = {}
    start = 0
    for blob, size in enumerate(sizes):
        cols = range(blob * markers_per_blob, (blob + 1) * markers_per_blob)
        marker_names[blob] = [f"GENE{c:03d}" for c in cols]
        matrix[start : start + size, list(cols)] += rng.poisson(
            marker_rate, size=(size, markers_per_blob)
        )
        start += size
    gene_names = [f"GENE{j:03d}" for j in range(n_genes)]
    return matrix, gene_names, marker_names


def pbmc_like(path, seed: int = 0, sparse_x: bool = False):
    """Eight well-separated blobs; sizes descending so ids are stable."""
    rng = np.random.default_rng(seed)
    sizes = [64, 56, 48, 44, 40, 36, 32, 28]
    matrix, gene_names, marker_names = blob_counts(rng, sizes, n_genes=120)
    cell_names = [f"cell{i:04d}" for i in range(sum(sizes))]
    write_h5ad(path, matrix, gene_names, cell_names, sparse_x=sparse_x)
    return {"sizes": sizes, "markers": marker_names}


def pancreas_like(path, seed: int = 1):
    """Six blobs on a lineage path with a four-stage timepoint column.

    Blob centers drift along a shared expression gradient so adjacent
    blobs exchange kNN edges; timepoint composition shifts from mostly
    E12.5 at the root to mostly E15.5 at the tips.
    """
    rng = np.random.default_rng(seed)
    sizes = [60, 52, 46, 40, 36, 30]
    stages = ["E12.5", "E13.5", "E14.5", "E15.5"]
    # rows: share of each stage per blob, root first
    stage_mix = np.array(
        [
            [0.70, 0.20, 0.07, 0.03],
            [0.30, 0.45, 0.18, 0.07],
            [0.10, 0.40, 0.35, 0.15],
            [0.05, 0.20, 0.45, 0.30],
            [0.03, 0.10, 0.37, 0.50],
            [0.02, 0.08, 0.25, 0.65],
        ]
    )
    n_genes = 90
    matrix, gene_names, marker_names = blob_counts(
        rng, sizes, n_genes, markers_per_blob=8, marker_rate=18.0
    )
    # gradient genes tie consecutive blobs together along a path
    gradient_cols = list(range(60, 80))
    start = 0
    for blob, size in enumerate(sizes):
        level = blob * 3.0
        matrix[start : start + size, gradient_cols] += rng.poisson(
            level + 1.0, size=(size, len(gradient_cols))
        )
        start += size

    timepoints = []
    for blob, size in enumerate(sizes):
        draws = rng.choice(len(stages), size=size, p=stage_mix[blob])
        timepoints.extend(stages[d] for d in draws)
    cell_names = [f"cell{i:04d}" for i in range(sum(sizes))]
    write_h5ad(
        path,
        matrix,
        gene_names,
        cell_names,
        obs_columns={"timepoint": np.array(timepoints)},
        categorical_obs=("timepoint",),
    )
    return {"sizes": sizes, "markers": marker_names, "timepoints": timepoints}


def committed_stomach_sketch() -> dict:
    return json.loads(COMMITTED_STOMACH.read_text(encoding="utf-8"))


def stomach_grn_inputs(directory) -> dict[str, Path]:
    """Edge and GO exports that regenerate a stomach question set.

    Positives are the committed sketch's verified pairs, present in both
    sources. The committed negative targets form the samplable pool, a
    few filler genes widen it so every TF keeps at least one candidate,
    and decoy targets covered by exclusion edges prove the filter.
    """
    directory = Path(directory)
    sketch = committed_stomach_sketch()
    positives = [p for p in sketch["pairs"] if p["label"] == 1]
    negative_targets = sorted(
        {p["target"] for p in sketch["pairs"] if p["label"] == 0}
    )
    tfs = sorted({p["tf"] for p in positives})

    grndb_rows = [("tf", "target", "tissue", "confidence")]
    for p in positives:
        grndb_rows.append((p["tf"], p["target"], "stomach", "high"))
    # pool genes enter the universe as targets of an unrelated dummy TF
    fillers = ["Pigr", "Reg3g", "Tff3"]
    for gene in negative_targets + fillers:
        grndb_rows.append(("Zbtb20", gene, "fetal liver", "low"))
    # decoys: excluded for every TF, so they must never be sampled
    decoys = ["Actb", "Gapdh"]
    for gene in decoys:
        for tf in tfs:
            grndb_rows.append((tf, gene, "fetal liver", "low"))

    trrust_rows = [(p["tf"], p["target"], "Activation", "1234") for p in positives]

    grndb_path = directory / "grndb_stomach.csv"
    grndb_path.write_text(
        "\n".join(",".join(row) for row in grndb_rows) + "\n", encoding="utf-8"
    )
    trrust_path = directory / "trrust.tsv"
    trrust_path.write_text(
        "\n".join("\t".join(row) for row in trrust_rows) + "\n", encoding="utf-8"
    )
    go_path = directory / "go_bp.tsv"
    extra_go = "Actb\tGO:0007010\tcytoskeleton organization\n"
    go_path.write_text(
        COMMITTED_GO_TSV.read_text(encoding="utf-8") + extra_go, encoding="utf-8"
    )
    return {"grndb": grndb_path, "trrust": trrust_path, "go": go_path}


def liver_grn_inputs(directory) -> dict[str, Path]:
    """Liver-shaped inputs: 71 verified edges across 21 TFs."""
    directory = Path(directory)
    per_tf = [4] * 8 + [3] * 13  # 32 + 39 = 71 positives over 21 TFs
    grndb_rows = [("tf", "target", "tissue", "confidence")]
    trrust_rows = []
    go_rows = ["# gene\tterm_id\tterm_name"]
    gene_serial = 0
    for t, count in enumerate(per_tf):
        tf = f"Ltf{t:02d}"
        for _ in range(count):
            target = f"Lgene{gene_serial:03d}"
            gene_serial += 1
            grndb_rows.append((tf, target, "liver", "high"))
            trrust_rows.append((tf, target, "Activation", "1"))
            go_rows.append(f"{target}\tGO:0008150\tbiological process")
    for j in range(120):  # negative pool
        grndb_rows.append(("Zbtb20", f"Lpool{j:03d}", "fetal brain", "low"))
    grndb_path = directory / "grndb_liver.csv"
    grndb_path.write_text(
        "\n".join(",".join(row) for row in grndb_rows) + "\n", encoding="utf-8"
    )
    trrust_path = directory / "trrust_liver.tsv"
    trrust_path.write_text(
        "\n".join("\t".join(row) for row in trrust_rows) + "\n", encoding="utf-8"
    )
    go_path = directory / "go_liver.tsv"
    go_path.write_text("\n".join(go_rows) + "\n", encoding="utf-8")
    return {"grndb": grndb_path, "trrust": trrust_path, "go": go_path}
