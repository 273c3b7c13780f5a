#!/usr/bin/env python3
"""Regenerate every checked-in data fixture from scratch.

Builds the three benchmark datasets (PBMC annotation, fetal liver
trajectory, fetal stomach GRN), their truth assets, the ontology and
synonym fixtures, and the replay scripts. Replay scripts are produced
in two passes: the pipeline first runs against a fingerprint-free
script while we record each rendered prompt's fingerprint, then the
stamped script is re-run to prove the run is reproducible end to end.

Run from the repo root:  python3 scripts/build_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from sketchbench.bench import DatasetEntry, grade_prediction, load_registry, run_bench
from sketchbench.engine import (
    EngineConfig,
    run_annotation_direct,
    run_annotation_pilot,
    run_grn,
    run_trajectory_direct,
    run_trajectory_pilot,
)
from sketchbench.gateway import Gateway, ReplayBackend, ReplayScript, content_fingerprint
from sketchbench.sketches import Mode, TaskKind, load_sketch
from sketchbench.bioops import GoTable, parse_monocle_report

DATA = REPO / "data"


# ----------------------------------------------------------- helpers


class _RecordingBackend:
    """Wraps a ReplayBackend and notes each request's prompt fingerprint."""

    def __init__(self, inner: ReplayBackend):
        self.inner = inner
        self.provider = inner.provider
        self.seen: list[tuple[str, str]] = []

    def send(self, req):
        self.seen.append((req.stage_tag, content_fingerprint(req.content)))
        return self.inner.send(req)


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def stamp_script(
    script_path: Path, responses: list[tuple[str, str]], run_once
) -> None:
    """Write script without fingerprints, run to capture them, rewrite."""
    write_json(
        script_path,
        [{"stage_tag": tag, "response": text} for tag, text in responses],
    )
    recorder = _RecordingBackend(ReplayBackend(ReplayScript.load(script_path)))
    run_once(Gateway(recorder))
    expected_tags = [tag for tag, _ in responses]
    seen_tags = [tag for tag, _ in recorder.seen]
    if seen_tags != expected_tags:
        raise SystemExit(
            f"{script_path.name}: stage order mismatch\n"
            f"  scripted: {expected_tags}\n  observed: {seen_tags}"
        )
    write_json(
        script_path,
        [
            {"stage_tag": tag, "fingerprint": fp, "response": text}
            for (tag, text), (_, fp) in zip(responses, recorder.seen)
        ],
    )


# ------------------------------------------------- PBMC annotation set

PBMC_CONTEXT = (
    "Peripheral blood mononuclear cells from a healthy human donor, "
    "10x Genomics 3' chemistry, about 2,700 cells after quality control. "
    "Counts were library-size normalized and log1p transformed; Leiden "
    "clustering at resolution 0.5 yielded 8 clusters."
)

PBMC_TOP_GENES = {
    0: ["IL7R", "CD3D", "CD3E", "CCR7", "LTB", "TRAC", "CD2", "CD27", "LDHB", "NOSIP"],
    1: ["CD14", "LYZ", "S100A8", "S100A9", "FCN1", "VCAN", "CST3", "LGALS2", "MS4A6A", "TYROBP"],
    2: ["CD79A", "CD79B", "MS4A1", "TCL1A", "LINC00926", "HLA-DQA1", "VPREB3", "CD74", "HLA-DRA", "FCER2"],
    3: ["CD8A", "CD8B", "CCL5", "GZMK", "NKG7", "CD3D", "CD2", "GZMA", "CTSW", "KLRG1"],
    4: ["GNLY", "NKG7", "GZMB", "PRF1", "KLRD1", "FGFBP2", "SPON2", "FCGR3A", "CST7", "HOPX"],
    5: ["FCGR3A", "MS4A7", "LST1", "AIF1", "FCER1G", "IFITM3", "SERPINA1", "CDKN1C", "HES4", "SIGLEC10"],
    6: ["FCER1A", "CST3", "HLA-DPB1", "HLA-DQA1", "HLA-DRA", "CLEC10A", "HLA-DPA1", "ENHO", "CD74", "HLA-DQB1"],
    7: ["PPBP", "PF4", "NRGN", "SDPR", "GNG11", "SPARC", "HIST1H2AC", "GP9", "AP001189.4", "TUBB1"],
}

PBMC_CELL_COUNTS = {0: 1144, 1: 480, 2: 342, 3: 316, 4: 154, 5: 162, 6: 32, 7: 14}

# (mean, fraction) per cluster per gene; absent pairs stay absent
PBMC_STATS = {
    0: {
        "IL7R": (1.8, 0.62), "CD3D": (2.2, 0.81), "CD3E": (1.9, 0.74),
        "CCR7": (1.2, 0.44), "LTB": (2.1, 0.78), "TRAC": (1.7, 0.66),
        "CD2": (1.5, 0.55), "CD27": (1.0, 0.41), "LDHB": (1.4, 0.60),
        "NOSIP": (0.9, 0.38),
    },
    1: {
        "CD14": (1.8, 0.73), "LYZ": (3.2, 0.97), "S100A8": (2.9, 0.90),
        "S100A9": (3.0, 0.93), "FCN1": (2.2, 0.84), "VCAN": (1.7, 0.69),
        "CST3": (2.5, 0.90), "LGALS2": (1.9, 0.77), "MS4A6A": (1.5, 0.66),
        "TYROBP": (2.8, 0.94), "LST1": (0.9, 0.40),
    },
    2: {
        "CD79A": (2.3, 0.85), "CD79B": (2.0, 0.80), "MS4A1": (2.6, 0.90),
        "TCL1A": (1.5, 0.60), "LINC00926": (1.1, 0.46), "HLA-DQA1": (2.0, 0.78),
        "VPREB3": (0.9, 0.38), "CD74": (3.2, 0.97), "HLA-DRA": (3.1, 0.95),
        "FCER2": (0.7, 0.30),
    },
    3: {
        "CD8A": (1.9, 0.63), "CD8B": (1.6, 0.55), "CCL5": (2.2, 0.72),
        "GZMK": (1.3, 0.46), "NKG7": (1.2, 0.48), "CD3D": (2.0, 0.77),
        "CD2": (1.4, 0.52), "GZMA": (1.1, 0.42), "CTSW": (1.0, 0.44),
        "KLRG1": (0.8, 0.33), "CD3E": (1.75, 0.70), "IL7R": (0.3, 0.12),
    },
    4: {
        "GNLY": (3.1, 0.90), "NKG7": (2.8, 0.92), "GZMB": (2.4, 0.85),
        "PRF1": (1.8, 0.74), "KLRD1": (1.6, 0.68), "FGFBP2": (1.9, 0.72),
        "SPON2": (1.4, 0.60), "FCGR3A": (0.9, 0.42), "CST7": (1.5, 0.64),
        "HOPX": (1.0, 0.40), "CD2": (1.1, 0.45),
    },
    5: {
        "FCGR3A": (2.1, 0.88), "MS4A7": (1.8, 0.79), "LST1": (2.2, 0.85),
        "AIF1": (1.9, 0.81), "FCER1G": (1.8, 0.76), "IFITM3": (1.6, 0.72),
        "SERPINA1": (1.2, 0.55), "CDKN1C": (0.9, 0.40), "HES4": (0.7, 0.33),
        "SIGLEC10": (0.6, 0.30), "LYZ": (2.4, 0.83), "CD14": (0.3, 0.15),
        "CST3": (1.9, 0.80),
    },
    6: {
        "FCER1A": (2.4, 0.86), "CST3": (2.9, 0.92), "HLA-DPB1": (2.6, 0.90),
        "HLA-DQA1": (2.2, 0.82), "HLA-DRA": (3.0, 0.95), "CLEC10A": (1.7, 0.68),
        "HLA-DPA1": (2.5, 0.88), "ENHO": (1.3, 0.50), "CD74": (3.1, 0.96),
        "HLA-DQB1": (2.1, 0.80), "LST1": (0.8, 0.35), "LYZ": (1.6, 0.60),
    },
    7: {
        "PPBP": (3.5, 0.93), "PF4": (3.2, 0.90), "NRGN": (1.8, 0.70),
        "SDPR": (2.1, 0.77), "GNG11": (2.4, 0.82), "SPARC": (1.6, 0.65),
        "HIST1H2AC": (1.3, 0.50), "GP9": (1.1, 0.44), "AP001189.4": (0.8, 0.30),
        "TUBB1": (1.5, 0.58),
    },
}

PBMC_HINTS = {
    "IL7R": ["CD4 T cells"],
    "CD14": ["CD14+ Monocytes"],
    "MS4A1": ["B cells"],
    "GNLY": ["NK cells"],
    "FCER1A": ["Dendritic cells"],
    "PPBP": ["Megakaryocytes", "Platelet"],
}

PBMC_TRUTH = {
    0: "CD4 T cells",
    1: "CD14+ Monocytes",
    2: "B cells",
    3: "CD8 T cells",
    4: "NK cells",
    5: "FCGR3A+ Monocytes",
    6: "Dendritic cells",
    7: "Megakaryocytes",
}


def pbmc_sketch_dict() -> dict:
    return {
        "schema_version": "1",
        "kind": "annotation",
        "context": PBMC_CONTEXT,
        "marker_k": 10,
        "cluster_count": 8,
        "clusters": [
            {
                "cluster_id": cid,
                "top_genes": PBMC_TOP_GENES[cid],
                "cell_count": PBMC_CELL_COUNTS[cid],
            }
            for cid in sorted(PBMC_TOP_GENES)
        ],
        "expression_stats": {
            str(cid): {
                gene: {"mean_expression": m, "fraction_expressing": f}
                for gene, (m, f) in genes.items()
            }
            for cid, genes in PBMC_STATS.items()
        },
        "reference_hints": PBMC_HINTS,
    }


_EVAL1 = """Structured evaluation of the first dotplot round.
{
  "1a": "LYZ, S100A8 and S100A9 dominate cluster 1; MS4A1 and CD79A mark cluster 2; GNLY and NKG7 peak in cluster 4; FCGR3A and MS4A7 peak in cluster 5; FCER1A and CST3 peak in cluster 6; PPBP and PF4 are exclusive to cluster 7.",
  "1b": "CD3D and CD3E are shared by clusters 0 and 3; NKG7 splits across 3 and 4; CST3 spans the myeloid clusters 1, 5 and 6.",
  "1c": "None; every queried gene is high somewhere.",
  "2a": "No cluster lacks a high marker in this panel.",
  "3a": "Yes, the lineages separate cleanly at this resolution.",
  "3b": {"0": "T cells", "1": "CD14+ Monocytes", "2": "B cells", "3": "T cells", "4": "NK cells", "5": "FCGR3A+ Monocytes", "6": "Dendritic cells", "7": "Platelet"},
  "3c": "Distinguish CD4 from CD8 T cells next; both T clusters need a subtype panel.",
  "3d": "Clusters 0 and 3 deserve subgrouping with CD4 and CD8 markers.",
  "4a": {"0": 0.55, "1": 0.92, "2": 0.90, "3": 0.50, "4": 0.78, "5": 0.62, "6": 0.66, "7": 0.88},
  "4b": [1, 2, 7]
}"""

_EVAL2 = """Second round, focused on the flagged T cell pair.
{
  "1a": "CD3D, CD3E and CD2 stay high in both clusters 0 and 3; FCER1A, CLEC10A and ENHO confirm cluster 6.",
  "1b": "The differential panel for the pair (0, 3) separates them: CCL5, CD8A and CD8B rise in cluster 3 while LTB, TRAC and IL7R rise in cluster 0.",
  "1c": "None in this panel.",
  "2a": "Clusters 1, 2, 5 and 7 show nothing here, as expected for already-stabilized identities.",
  "3a": "Yes; the pair analysis resolves the last ambiguity between the two T clusters.",
  "3b": {"0": "CD4 T cells", "3": "CD8 T cells", "4": "NK cells", "5": "FCGR3A+ Monocytes", "6": "Dendritic cells"},
  "3c": "Only the two myeloid identities remain to confirm.",
  "3d": "No further subgrouping needed.",
  "4a": {"0": 0.86, "3": 0.84, "4": 0.90, "5": 0.70, "6": 0.72},
  "4b": [0, 3, 4]
}"""

_EVAL3 = """Final confirmation round for the myeloid split.
{
  "1a": "FCGR3A, MS4A7 and LST1 peak in cluster 5; FCER1A and CLEC10A peak in cluster 6; CST3 is shared but highest in 6.",
  "1b": "LST1 is high in 5 and low elsewhere; CST3 grades across 1, 5 and 6.",
  "1c": "None.",
  "2a": "Clusters 0, 2, 3 and 7 show nothing in this myeloid panel, consistent with their lymphoid and platelet identities.",
  "3a": "Yes; both monocyte subsets and the dendritic cluster are now unambiguous.",
  "3b": {"5": "FCGR3A+ Monocytes", "6": "Dendritic cells"},
  "3c": "None.",
  "3d": "None.",
  "4a": {"5": 0.88, "6": 0.90},
  "4b": [5, 6]
}"""

PBMC_PILOT_RESPONSES = [
    (
        "annot.hypothesis.1",
        "Initial hypothesis: the eight clusters split into lymphoid "
        "(0, 2, 3, 4), myeloid (1, 5, 6) and platelet-like (7) branches. "
        "IL7R and CCR7 in cluster 0 suggest naive or memory T cells; CCL5 "
        "with CD8A in cluster 3 suggests cytotoxic T cells; GNLY and NKG7 "
        "in cluster 4 point at NK cells. CD14 versus FCGR3A separates the "
        "two monocyte clusters, FCER1A marks dendritic cells, and PPBP "
        "with PF4 marks platelets or megakaryocyte fragments.",
    ),
    (
        "annot.marker_proposal.1",
        "Broad lineage panel first, one anchor per expected type.\n"
        "1. List of cell types with their markers:\n"
        "[T cells]: CD3D; CD3E\n"
        "[CD14+ Monocytes]: LYZ; CD14; CST3\n"
        "[B cells]: MS4A1; CD79A\n"
        "[NK cells]: NKG7; GNLY\n"
        "[Dendritic cells]: FCER1A; CST3\n"
        "[Platelet]: PPBP; PF4\n"
        "[FCGR3A+ Monocytes]: FCGR3A; MS4A7\n"
        "2. Python list of all marker genes:\n"
        "MARKER_GENES = ['CD3D', 'CD3E', 'LYZ', 'CD14', 'MS4A1', 'CD79A', "
        "'NKG7', 'GNLY', 'FCER1A', 'CST3', 'PPBP', 'PF4', 'FCGR3A', 'MS4A7']",
    ),
    ("annot.dotplot_eval.1", _EVAL1),
    (
        "annot.hypothesis.2",
        "Revised hypothesis: all broad lineages are placed; the open "
        "question is the CD4 versus CD8 split between clusters 0 and 3. "
        "Both carry CD3D/CD3E/CD2, so the next panel should pair the "
        "shared T module with dendritic confirmation markers and let the "
        "differential analysis arbitrate the pair.",
    ),
    (
        "annot.marker_proposal.2",
        "Probe the shared T cell module plus the dendritic trio.\n"
        "1. List of cell types with their markers:\n"
        "[T cells, shared module]: CD3D; CD3E; CD2\n"
        "[Dendritic cells]: FCER1A; CLEC10A; ENHO\n"
        "2. Python list of all marker genes:\n"
        "MARKER_GENES = ['CD3D', 'CD3E', 'CD2', 'FCER1A', 'CLEC10A', 'ENHO']",
    ),
    ("annot.dotplot_eval.2", _EVAL2),
    (
        "annot.hypothesis.3",
        "Final check: every cluster is labeled and only the two myeloid "
        "identities (5 and 6) remain unstabilized. A focused myeloid panel "
        "separating non-classical monocytes from dendritic cells should "
        "close the loop.",
    ),
    (
        "annot.marker_proposal.3",
        "Confirm the myeloid split.\n"
        "1. List of cell types with their markers:\n"
        "[FCGR3A+ Monocytes]: FCGR3A; MS4A7; LST1\n"
        "[Dendritic cells]: FCER1A; CLEC10A; CST3\n"
        "2. Python list of all marker genes:\n"
        "MARKER_GENES = ['FCGR3A', 'MS4A7', 'LST1', 'FCER1A', 'CLEC10A', 'CST3']",
    ),
    ("annot.dotplot_eval.3", _EVAL3),
]

PBMC_DIRECT_RESPONSES = [
    (
        "annot.direct",
        "Cluster 0 carries IL7R and CCR7 so it is T lineage; cluster 3 "
        "carries CD8A and CCL5, also T lineage. Cluster 1 is classical "
        "monocyte by CD14 and LYZ, cluster 2 is B by MS4A1 and CD79A, "
        "cluster 4 is NK by GNLY, cluster 5 is non-classical monocyte by "
        "FCGR3A, cluster 6 is dendritic by FCER1A, cluster 7 is platelet "
        "by PPBP and PF4.\n"
        "{0: 'T cells', 1: 'CD14+ Monocytes', 2: 'B cells', 3: 'T cells', "
        "4: 'NK cells', 5: 'FCGR3A+ Monocytes', 6: 'Dendritic cells', "
        "7: 'Platelet'}",
    ),
]


# ------------------------------------------------- ontology and synonyms

CL_FIXTURE_TERMS = [
    ("CL:0000000", "cell", []),
    ("CL:0000225", "anucleate cell", ["CL:0000000"]),
    ("CL:0000066", "epithelial cell", ["CL:0000000"]),
    ("CL:0000182", "hepatocyte", ["CL:0000066"]),
    ("CL:0000988", "hematopoietic cell", ["CL:0000000"]),
    ("CL:0000738", "leukocyte", ["CL:0000988"]),
    ("CL:0000542", "lymphocyte", ["CL:0000738"]),
    ("CL:0000763", "myeloid cell", ["CL:0000988"]),
    ("CL:0000084", "T cell", ["CL:0000542"]),
    ("CL:0000624", "CD4-positive, alpha-beta T cell", ["CL:0000084"]),
    ("CL:0000625", "CD8-positive, alpha-beta T cell", ["CL:0000084"]),
    ("CL:0000236", "B cell", ["CL:0000542"]),
    ("CL:0000623", "natural killer cell", ["CL:0000542"]),
    ("CL:0000576", "monocyte", ["CL:0000763"]),
    ("CL:0002057", "CD14-positive, CD16-negative classical monocyte", ["CL:0000576"]),
    ("CL:0002396", "CD14-low, CD16-positive monocyte", ["CL:0000576"]),
    ("CL:0000451", "dendritic cell", ["CL:0000738"]),
    ("CL:0000556", "megakaryocyte", ["CL:0000763"]),
    ("CL:0000233", "platelet", ["CL:0000225"]),
]

# twelve-term synthetic hierarchy used by the ontology scoring grid
ACCEPTANCE_TERMS = [
    ("TD:0000001", "alpha cell", []),
    ("TD:0000002", "beta cell", ["TD:0000001"]),
    ("TD:0000003", "gamma cell", ["TD:0000002"]),
    ("TD:0000004", "delta cell", ["TD:0000002"]),
    ("TD:0000005", "epsilon cell", ["TD:0000001"]),
    ("TD:0000006", "zeta cell", ["TD:0000005"]),
    ("TD:0000007", "eta cell", ["TD:0000006"]),
    ("TD:0000008", "theta cell", ["TD:0000005"]),
    ("TD:0000009", "iota cell", ["TD:0000001"]),
    ("TD:0000010", "kappa cell", ["TD:0000009"]),
    ("TD:0000011", "lambda cell", ["TD:0000010"]),
    ("TD:0000012", "mu cell", ["TD:0000009"]),
]


def obo_text(terms) -> str:
    lines = ["format-version: 1.2", ""]
    for term_id, name, parents in terms:
        lines.append("[Term]")
        lines.append(f"id: {term_id}")
        lines.append(f"name: {name}")
        for parent in parents:
            parent_name = next(n for i, n, _ in terms if i == parent)
            lines.append(f"is_a: {parent} ! {parent_name}")
        lines.append("")
    return "\n".join(lines)


SYNONYM_ROWS = [
    ("cd4 t cell", "cd4 positive alpha beta t cell"),
    ("cd8 t cell", "cd8 positive alpha beta t cell"),
    ("cd14 monocytes", "cd14 positive cd16 negative classical monocyte"),
    ("cd14 monocyte", "cd14 positive cd16 negative classical monocyte"),
    ("fcgr3a monocytes", "cd14 low cd16 positive monocyte"),
    ("fcgr3a monocyte", "cd14 low cd16 positive monocyte"),
    ("nk cell", "natural killer cell"),
    ("megakaryocytes", "megakaryocyte"),
    ("platelets", "platelet"),
    ("hepatocytes", "hepatocyte"),
]


# ------------------------------------------------- liver trajectory set

LIVER_LABELS = {
    0: "Hepatoblast",
    1: "Hepatocyte",
    2: "Cholangiocyte",
    3: "HSPC",
    4: "Erythroid progenitor",
    5: "Erythrocyte",
    6: "Megakaryocyte",
    7: "Myeloid progenitor",
    8: "Macrophage",
    9: "Neutrophil",
    10: "B cell progenitor",
    11: "Endothelial cell",
    12: "Mesenchymal cell",
    13: "Mesothelial cell",
    14: "NK cell",
}

LIVER_TOP5 = {
    0: ["Afp", "Dlk1", "Hnf4a", "Alb", "Id3"],
    1: ["Alb", "Ttr", "Apoa2", "Ahsg", "Fabp1"],
    2: ["Sox9", "Spp1", "Krt19", "Epcam", "Hnf1b"],
    3: ["Kit", "Cd34", "Gata2", "Hlf", "Flt3"],
    4: ["Gata1", "Klf1", "Epor", "Tfrc", "Zfpm1"],
    5: ["Hba-a1", "Hbb-bs", "Alas2", "Snca", "Bpgm"],
    6: ["Pf4", "Itga2b", "Vwf", "Gp9", "Ppbp"],
    7: ["Mpo", "Elane", "Prtn3", "Ms4a3", "Ctsg"],
    8: ["Csf1r", "Cx3cr1", "Adgre1", "C1qa", "Mrc1"],
    9: ["S100a8", "S100a9", "Ltf", "Camp", "Lcn2"],
    10: ["Cd79a", "Cd79b", "Vpreb1", "Igll1", "Pax5"],
    11: ["Pecam1", "Cdh5", "Kdr", "Lyve1", "Stab2"],
    12: ["Col1a1", "Col3a1", "Pdgfrb", "Des", "Acta2"],
    13: ["Msln", "Upk3b", "Krt8", "Wt1", "Podxl"],
    14: ["Nkg7", "Gzma", "Klrb1c", "Ncr1", "Prf1"],
}

LIVER_TIMEPOINTS = {
    0: (0.55, 0.30, 0.10, 0.05),
    1: (0.02, 0.08, 0.30, 0.60),
    2: (0.03, 0.12, 0.35, 0.50),
    3: (0.50, 0.30, 0.15, 0.05),
    4: (0.30, 0.40, 0.20, 0.10),
    5: (0.05, 0.15, 0.35, 0.45),
    6: (0.10, 0.30, 0.35, 0.25),
    7: (0.15, 0.35, 0.30, 0.20),
    8: (0.20, 0.30, 0.30, 0.20),
    9: (0.02, 0.08, 0.35, 0.55),
    10: (0.05, 0.20, 0.35, 0.40),
    11: (0.35, 0.30, 0.20, 0.15),
    12: (0.30, 0.30, 0.25, 0.15),
    13: (0.40, 0.30, 0.20, 0.10),
    14: (0.05, 0.15, 0.35, 0.45),
}

STAGES = ("E10.5", "E12.5", "E14.5", "E17.5")

LIVER_CONTEXT = (
    "Mouse fetal liver sampled at E10.5, E12.5, E14.5 and E17.5. The organ "
    "hosts both the hepatic lineage (hepatoblasts maturing into hepatocytes "
    "and cholangiocytes) and transient hematopoiesis (HSPC-derived "
    "erythroid, megakaryocytic, myeloid, B and NK branches), plus "
    "endothelial, mesenchymal and mesothelial support populations. "
    "15 Leiden clusters."
)

# truth tree: nested dict keyed by cell type, synthetic "root" on top
LIVER_TRUTH_TREE = {
    "root": {
        "Hepatoblast": {"Hepatocyte": {}, "Cholangiocyte": {}},
        "HSPC": {
            "Erythroid progenitor": {"Erythrocyte": {}},
            "Megakaryocyte": {},
            "Myeloid progenitor": {"Macrophage": {}, "Neutrophil": {}},
            "B cell progenitor": {},
            "NK cell": {},
        },
        "Endothelial cell": {},
        "Mesothelial cell": {"Mesenchymal cell": {}},
    }
}

# pilot run's final answer: megakaryocytes hung off the erythroid
# progenitor instead of the HSPC (one wrong parent)
LIVER_PILOT_TREE = (
    "{'root': {'Hepatoblast': {'Hepatocyte': {}, 'Cholangiocyte': {}}, "
    "'HSPC': {'Erythroid progenitor': {'Erythrocyte': {}, 'Megakaryocyte': {}}, "
    "'Myeloid progenitor': {'Macrophage': {}, 'Neutrophil': {}}, "
    "'B cell progenitor': {}, 'NK cell': {}}, "
    "'Endothelial cell': {}, 'Mesothelial cell': {'Mesenchymal cell': {}}}}"
)

# direct run's final answer: three wrong parents
LIVER_DIRECT_TREE = (
    "{'root': {'Hepatoblast': {'Hepatocyte': {}, 'Cholangiocyte': {}}, "
    "'HSPC': {'Erythroid progenitor': {'Erythrocyte': {}, 'Megakaryocyte': {}}, "
    "'Myeloid progenitor': {'Macrophage': {}, 'Neutrophil': {}, 'NK cell': {}}, "
    "'B cell progenitor': {}}, "
    "'Endothelial cell': {}, 'Mesothelial cell': {}, 'Mesenchymal cell': {}}}"
)

LIVER_ANNOT_DICT = (
    "{0: 'Hepatoblast', 1: 'Hepatocyte', 2: 'Cholangiocyte', 3: 'HSPC', "
    "4: 'Erythroid progenitor', 5: 'Erythrocyte', 6: 'Megakaryocyte', "
    "7: 'Myeloid progenitor', 8: 'Macrophage', 9: 'Neutrophil', "
    "10: 'B cell progenitor', 11: 'Endothelial cell', 12: 'Mesenchymal cell', "
    "13: 'Mesothelial cell', 14: 'NK cell'}"
)

LIVER_ANNOTATE_RESPONSE = (
    "Reading the panels cluster by cluster: Afp with Dlk1 is the "
    "hepatoblast signature and its mass sits at E10.5; Alb/Ttr/Apoa2 mark "
    "mature hepatocytes enriched late; Sox9/Krt19/Epcam is biliary. Kit "
    "with Cd34 and Hlf marks the stem and progenitor pool, Gata1/Klf1 the "
    "erythroid progenitors, hemoglobin genes the erythrocytes, Pf4/Itga2b "
    "megakaryocytes, Mpo/Elane granulocyte-monocyte progenitors, Csf1r "
    "macrophages, S100a8/Ltf neutrophils, Cd79a/Vpreb1 B progenitors, "
    "Nkg7/Ncr1 NK cells. Pecam1/Cdh5 is endothelial, Col1a1/Pdgfrb "
    "mesenchymal, Msln/Wt1 mesothelial.\n" + LIVER_ANNOT_DICT
)

LIVER_TREE_DRAFT_TEXT = (
    "Starting from Hepatoblast and tracking stage enrichment, the "
    "adjacency I propose is: {'root': ['Hepatoblast', 'HSPC', "
    "'Endothelial cell', 'Mesothelial cell'], 'Hepatoblast': "
    "['Hepatocyte', 'Cholangiocyte'], 'HSPC': ['Erythroid progenitor', "
    "'Myeloid progenitor', 'B cell progenitor', 'NK cell'], 'Erythroid "
    "progenitor': ['Erythrocyte', 'Megakaryocyte'], 'Myeloid progenitor': "
    "['Macrophage', 'Neutrophil'], 'Mesothelial cell': ['Mesenchymal "
    "cell']}. The megakaryocyte placement under the erythroid progenitor "
    "reflects the shared MEP stage."
)

LIVER_PILOT_RESPONSES = [
    ("traj.annotate", LIVER_ANNOTATE_RESPONSE),
    ("traj.root", "Hepatoblast"),
    ("traj.tree", LIVER_TREE_DRAFT_TEXT),
    ("traj.finalize", LIVER_PILOT_TREE),
    (
        "traj.monocle_analysis",
        "The analytical report supports the split of the hepatic branch "
        "from hematopoiesis at the root. The reported pseudotime places "
        "the megakaryocyte branch directly after the HSPC stage rather "
        "than the erythroid progenitor, which contradicts the current "
        "tree; everything else matches. No missing progenitors, no "
        "cluster-annotation mismatches, root coverage is complete.",
    ),
    (
        "traj.reconsider",
        "Keeping the annotation as is. The report disagreement on the "
        "megakaryocyte parent is noted, but the shared erythroid-"
        "megakaryocyte module (Gata1, Zfpm1 upstream of Pf4) justifies "
        "keeping Megakaryocyte under the erythroid progenitor.\n"
        "trajectory_dict and annotation_dict follow.\n"
        + LIVER_PILOT_TREE + "\n" + LIVER_ANNOT_DICT,
    ),
    (
        "traj.synthesis",
        "(" + LIVER_PILOT_TREE + ", " + LIVER_ANNOT_DICT + ")",
    ),
]

LIVER_DIRECT_RESPONSES = [
    ("traj.annotate", LIVER_ANNOTATE_RESPONSE),
    (
        "traj.direct_tree",
        "Proposed tree with all clusters attached:\n" + LIVER_DIRECT_TREE,
    ),
    (
        "traj.reconsider",
        "(" + LIVER_DIRECT_TREE + ", " + LIVER_ANNOT_DICT + ")",
    ),
]


def liver_monocle_report() -> str:
    edges = []

    def walk(node, children):
        for child, sub in children.items():
            if node != "root":
                edges.append((node, child))
            walk(child, sub)

    walk("root", LIVER_TRUTH_TREE["root"])
    order = [
        "Hepatoblast", "HSPC", "Endothelial cell", "Mesothelial cell",
        "Hepatocyte", "Cholangiocyte", "Erythroid progenitor",
        "Megakaryocyte", "Myeloid progenitor", "B cell progenitor",
        "NK cell", "Mesenchymal cell", "Erythrocyte", "Macrophage",
        "Neutrophil",
    ]
    lines = [f"clusters: {len(LIVER_LABELS)}; edges: {len(edges)}", "edges:"]
    lines += [f"  {a} -> {b}" for a, b in edges]
    lines.append("pseudotime_order:")
    lines.append("  " + " < ".join(order))
    return "\n".join(lines) + "\n"


def liver_sketch_dict() -> dict:
    return {
        "schema_version": "1",
        "kind": "trajectory",
        "context": LIVER_CONTEXT,
        "clusters": [
            {"cluster_id": cid, "top_genes": LIVER_TOP5[cid]}
            for cid in sorted(LIVER_TOP5)
        ],
        "timepoint_percentages": {
            str(cid): dict(zip(STAGES, vals))
            for cid, vals in LIVER_TIMEPOINTS.items()
        },
        "monocle_report": liver_monocle_report(),
    }


# ------------------------------------------------- stomach GRN set

# (tf, target, label, pilot_score)
GRN_PAIRS = [
    ("Stat1", "Irf7", 1, 0.9),
    ("Stat1", "Gbp2", 1, 0.9),
    ("Stat1", "Psmb8", 1, 0.9),
    ("Irf1", "Tap1", 1, 0.9),
    ("Irf1", "Gbp5", 1, 0.9),
    ("Gata4", "Tff1", 1, 0.9),
    ("Gata4", "Muc5ac", 1, 0.7),
    ("Gata4", "Hnf4a", 1, 0.9),
    ("Sox2", "Tff2", 1, 0.9),
    ("Sox2", "Aqp5", 1, 0.7),
    ("Klf5", "Muc6", 1, 0.9),
    ("Klf5", "Tff1", 1, 0.7),
    ("Foxa2", "Muc5ac", 1, 0.9),
    ("Foxa2", "Pgc", 1, 0.3),
    ("Hnf4a", "Apoa1", 1, 0.9),
    ("Hnf4a", "Ttr", 1, 0.9),
    ("Spdef", "Muc6", 1, 0.9),
    ("Spdef", "Agr2", 1, 0.3),
    ("Pdx1", "Gast", 1, 0.9),
    ("Pdx1", "Sst", 1, 0.7),
    ("Nr5a2", "Pga5", 1, 0.9),
    ("Nr5a2", "Cym", 1, 0.3),
    ("Nr5a2", "Cela1", 1, 0.3),
    ("Stat1", "Myh6", 0, 0.1),
    ("Stat1", "Neurod1", 0, 0.1),
    ("Stat1", "Rho", 0, 0.3),
    ("Irf1", "Ins1", 0, 0.1),
    ("Irf1", "Myog", 0, 0.1),
    ("Irf1", "Gfap", 0, 0.3),
    ("Gata4", "Olig2", 0, 0.1),
    ("Gata4", "Nphs2", 0, 0.1),
    ("Gata4", "Gzma", 0, 0.7),
    ("Sox2", "Hba-a1", 0, 0.1),
    ("Sox2", "Alb", 0, 0.7),
    ("Klf5", "Ins2", 0, 0.1),
    ("Klf5", "Des", 0, 0.3),
    ("Foxa2", "Cd79a", 0, 0.1),
    ("Foxa2", "Pecam1", 0, 0.7),
    ("Hnf4a", "Eno2", 0, 0.7),
    ("Hnf4a", "Krt14", 0, 0.1),
    ("Spdef", "Cdh5", 0, 0.1),
    ("Spdef", "Olig1", 0, 0.1),
    ("Pdx1", "Camp", 0, 0.3),
    ("Pdx1", "Ltf", 0, 0.1),
    ("Nr5a2", "Prf1", 0, 0.1),
    ("Nr5a2", "Cx3cr1", 0, 0.1),
]

GO_TERMS = {
    "GO:0045944": "positive regulation of transcription by RNA polymerase II",
    "GO:0051607": "defense response to virus",
    "GO:0002474": "antigen processing and presentation of peptide antigen via MHC class I",
    "GO:0070254": "mucus secretion",
    "GO:0007586": "digestion",
    "GO:0006629": "lipid metabolic process",
    "GO:0060047": "heart contraction",
    "GO:0030182": "neuron differentiation",
    "GO:0007601": "visual perception",
    "GO:0042593": "glucose homeostasis",
    "GO:0007519": "skeletal muscle tissue development",
    "GO:0007417": "central nervous system development",
    "GO:0003094": "glomerular filtration",
    "GO:0001913": "T cell mediated cytotoxicity",
    "GO:0015671": "oxygen transport",
    "GO:0050853": "B cell receptor signaling pathway",
    "GO:0006096": "glycolytic process",
    "GO:0008544": "epidermis development",
    "GO:0001525": "angiogenesis",
    "GO:0045087": "innate immune response",
}

GO_ASSIGNMENTS = {
    "Stat1": ["GO:0045944", "GO:0051607"],
    "Irf1": ["GO:0045944", "GO:0051607"],
    "Gata4": ["GO:0045944", "GO:0070254", "GO:0060047"],
    "Sox2": ["GO:0045944", "GO:0070254"],
    "Klf5": ["GO:0045944", "GO:0070254"],
    "Foxa2": ["GO:0045944", "GO:0070254", "GO:0007586"],
    "Hnf4a": ["GO:0045944", "GO:0006629", "GO:0042593"],
    "Spdef": ["GO:0045944", "GO:0070254"],
    "Pdx1": ["GO:0045944", "GO:0007586", "GO:0042593"],
    "Nr5a2": ["GO:0045944", "GO:0007586"],
    "Irf7": ["GO:0051607"],
    "Gbp2": ["GO:0051607"],
    "Psmb8": ["GO:0051607", "GO:0002474"],
    "Tap1": ["GO:0051607", "GO:0002474"],
    "Gbp5": ["GO:0051607"],
    "Tff1": ["GO:0070254"],
    "Tff2": ["GO:0070254"],
    "Muc5ac": ["GO:0070254"],
    "Muc6": ["GO:0070254"],
    "Agr2": ["GO:0070254"],
    "Aqp5": ["GO:0070254"],
    "Pgc": ["GO:0007586"],
    "Gast": ["GO:0007586"],
    "Sst": ["GO:0007586", "GO:0042593"],
    "Pga5": ["GO:0007586"],
    "Cym": ["GO:0007586"],
    "Cela1": ["GO:0007586"],
    "Apoa1": ["GO:0006629"],
    "Ttr": ["GO:0006629"],
    "Myh6": ["GO:0060047"],
    "Neurod1": ["GO:0030182"],
    "Rho": ["GO:0007601"],
    "Ins1": ["GO:0042593"],
    "Ins2": ["GO:0042593"],
    "Myog": ["GO:0007519"],
    "Gfap": ["GO:0007417"],
    "Olig1": ["GO:0007417"],
    "Olig2": ["GO:0007417"],
    "Nphs2": ["GO:0003094"],
    "Gzma": ["GO:0001913"],
    "Prf1": ["GO:0001913"],
    "Hba-a1": ["GO:0015671"],
    "Alb": ["GO:0006629"],
    "Cd79a": ["GO:0050853"],
    "Des": ["GO:0007519"],
    "Eno2": ["GO:0006096"],
    "Krt14": ["GO:0008544"],
    "Cdh5": ["GO:0001525"],
    "Pecam1": ["GO:0001525"],
    "Camp": ["GO:0045087"],
    "Ltf": ["GO:0045087"],
    "Cx3cr1": ["GO:0045087"],
}

FEW_SHOT_BLOCK = (
    "*Example*:\n"
    "• TF: Gata1 and Context A tissues (fetal liver)\n"
    "• Functional overlap (shared GO BP terms): erythrocyte differentiation\n"
    "Decide how much possible Gata1 directly regulates Klf1 in (fetal liver):\n"
    "Reasoning: Gata1 is the master erythroid regulator and Klf1 is one of "
    "its canonical direct targets.\n"
    "Possibility is: 0.95\n\n"
)

GRN_CONTEXT_A = "adult stomach"
GRN_CONTEXT_B = "fetal stomach"


def grn_sketch_dict() -> dict:
    genes = sorted({g for tf, tg, _, _ in GRN_PAIRS for g in (tf, tg)})
    return {
        "schema_version": "1",
        "kind": "grn",
        "tissue_a": GRN_CONTEXT_A,
        "tissue_b": GRN_CONTEXT_B,
        "pairs": [
            {"tf": tf, "target": tg, "label": label}
            for tf, tg, label, _ in GRN_PAIRS
        ],
        "go_bp_table": {
            gene.upper(): sorted(GO_ASSIGNMENTS[gene]) for gene in genes
        },
        "few_shot_block": FEW_SHOT_BLOCK,
    }


def grn_reason(tf: str, target: str, label: int, score: float) -> str:
    if score >= 0.9:
        return (
            f"{target} is a well-supported direct {tf} target and the "
            "functional context matches."
        )
    if score >= 0.7:
        return (
            f"{tf} plausibly binds the {target} promoter but direct "
            "evidence in this tissue is thin."
        )
    if score >= 0.3:
        return (
            f"The overlap is weak and {target} regulation by {tf} is more "
            "likely indirect."
        )
    return (
        f"{target} belongs to an unrelated program with no shared GO BP "
        f"terms with {tf}."
    )


def grn_responses(mode: str) -> list[tuple[str, str]]:
    out = []
    for idx, (tf, target, label, score) in enumerate(GRN_PAIRS):
        text = (
            f"Reasoning: {grn_reason(tf, target, label, score)}\n"
            f"Possibility is: {score}"
        )
        out.append((f"grn.{mode}.{idx}", text))
    return out


# --------------------------------------------------------------- main


def build_pbmc() -> None:
    write_json(DATA / "sketches" / "pbmc3k.annotation.json", pbmc_sketch_dict())
    rows = ["cluster_id,label"] + [
        f"{cid},{PBMC_TRUTH[cid]}" for cid in sorted(PBMC_TRUTH)
    ]
    write_text(DATA / "truth" / "pbmc3k.labels.csv", "\n".join(rows) + "\n")

    sketch = load_sketch(DATA / "sketches" / "pbmc3k.annotation.json")
    cfg = EngineConfig()

    stamp_script(
        DATA / "replay" / "pbmc3k.pilot.json",
        PBMC_PILOT_RESPONSES,
        lambda gw: run_annotation_pilot(sketch, gw, cfg, dataset_id="pbmc3k"),
    )
    stamp_script(
        DATA / "replay" / "pbmc3k.direct.json",
        PBMC_DIRECT_RESPONSES,
        lambda gw: run_annotation_direct(sketch, gw, cfg, dataset_id="pbmc3k"),
    )


def build_ontologies() -> None:
    write_text(DATA / "ontology" / "cl_fixture.obo", obo_text(CL_FIXTURE_TERMS))
    write_text(
        DATA / "ontology" / "acceptance_dag.obo", obo_text(ACCEPTANCE_TERMS)
    )
    rows = [f"{raw}\t{canon}" for raw, canon in SYNONYM_ROWS]
    write_text(
        DATA / "ontology" / "cell_synonyms.tsv", "\n".join(rows) + "\n"
    )


def build_liver() -> None:
    write_json(DATA / "sketches" / "liver.trajectory.json", liver_sketch_dict())
    write_json(DATA / "truth" / "liver.tree.json", LIVER_TRUTH_TREE)

    sketch = load_sketch(DATA / "sketches" / "liver.trajectory.json")
    parse_monocle_report(sketch.monocle_report)  # grammar self-check
    cfg = EngineConfig()

    stamp_script(
        DATA / "replay" / "liver.pilot.json",
        LIVER_PILOT_RESPONSES,
        lambda gw: run_trajectory_pilot(sketch, gw, cfg, dataset_id="liver"),
    )
    stamp_script(
        DATA / "replay" / "liver.direct.json",
        LIVER_DIRECT_RESPONSES,
        lambda gw: run_trajectory_direct(sketch, gw, cfg, dataset_id="liver"),
    )


def build_grn() -> None:
    write_json(DATA / "sketches" / "stomach.grn.json", grn_sketch_dict())
    rows = ["tf,target,label"] + [
        f"{tf},{tg},{label}" for tf, tg, label, _ in GRN_PAIRS
    ]
    write_text(DATA / "truth" / "stomach.labels.csv", "\n".join(rows) + "\n")

    tsv_rows = []
    for gene in sorted(GO_ASSIGNMENTS):
        for term in GO_ASSIGNMENTS[gene]:
            tsv_rows.append(f"{gene}\t{term}\t{GO_TERMS[term]}")
    write_text(
        DATA / "go" / "stomach_go_bp.tsv",
        "# gene\tterm_id\tterm_name\n" + "\n".join(tsv_rows) + "\n",
    )

    sketch = load_sketch(DATA / "sketches" / "stomach.grn.json")
    table = GoTable.load_tsv(DATA / "go" / "stomach_go_bp.tsv")
    cfg = EngineConfig()

    stamp_script(
        DATA / "replay" / "stomach.pilot.json",
        grn_responses("pilot"),
        lambda gw: run_grn(
            sketch, gw, cfg, Mode.PILOT, go_table=table, dataset_id="stomach"
        ),
    )
    stamp_script(
        DATA / "replay" / "stomach.direct.json",
        grn_responses("direct"),
        lambda gw: run_grn(
            sketch, gw, cfg, Mode.DIRECT, go_table=table, dataset_id="stomach"
        ),
    )


def build_registry() -> None:
    write_json(
        DATA / "registry.json",
        {
            "rate_card": {
                "replay-model": ["1.25", "10.00"],
            },
            "datasets": [
                {
                    "id": "pbmc3k",
                    "task_kind": "annotation",
                    "sketch": "sketches/pbmc3k.annotation.json",
                    "truth": "truth/pbmc3k.labels.csv",
                    "ontology": "ontology/cl_fixture.obo",
                    "synonyms": "ontology/cell_synonyms.tsv",
                    "replay_script": "replay/pbmc3k.pilot.json",
                    "notes": "8-cluster PBMC annotation benchmark",
                },
                {
                    "id": "liver",
                    "task_kind": "trajectory",
                    "sketch": "sketches/liver.trajectory.json",
                    "truth": "truth/liver.tree.json",
                    "replay_script": "replay/liver.pilot.json",
                    "notes": "fetal liver lineage tree, 15 cell types",
                },
                {
                    "id": "stomach",
                    "task_kind": "grn",
                    "sketch": "sketches/stomach.grn.json",
                    "truth": "truth/stomach.labels.csv",
                    "go_table": "go/stomach_go_bp.tsv",
                    "replay_script": "replay/stomach.pilot.json",
                    "notes": "46 TF-target pairs, balanced labels",
                },
            ],
        },
    )


def verify() -> None:
    """Re-run everything through the bench harness and print the metrics
    that the test suite commits to."""
    registry = load_registry(DATA / "registry.json")

    def factory_for(script: Path):
        return lambda: Gateway(
            ReplayBackend.from_file(script), ledger=registry.ledger()
        )

    summary = {}
    for dataset_id, mode in [
        ("pbmc3k", Mode.PILOT),
        ("pbmc3k", Mode.DIRECT),
        ("liver", Mode.PILOT),
        ("liver", Mode.DIRECT),
        ("stomach", Mode.PILOT),
        ("stomach", Mode.DIRECT),
    ]:
        entry = registry.get(dataset_id)
        script = DATA / "replay" / f"{dataset_id}.{mode.value}.json"
        if dataset_id == "pbmc3k" and mode is Mode.DIRECT:
            script = DATA / "replay" / "pbmc3k.direct.json"
        fragment = run_bench(
            entry, mode, 1, factory_for(script), EngineConfig()
        )
        assert not fragment.failures, fragment.repeats[0].error
        metrics = fragment.repeats[0].metrics
        summary[f"{dataset_id}.{mode.value}"] = metrics
        rendered = "  ".join(f"{k}={v:.10g}" for k, v in sorted(metrics.items()))
        print(f"{dataset_id:8s} {mode.value:6s} {rendered}")
    return None


def main() -> None:
    build_ontologies()
    build_pbmc()
    build_liver()
    build_grn()
    build_registry()
    verify()
    print("fixtures written under", DATA)


if __name__ == "__main__":
    main()
