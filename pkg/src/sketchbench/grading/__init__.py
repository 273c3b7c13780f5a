"""Metric suite: ontology-aware annotation accuracy, trajectory tree
metrics, and binary-classification metrics."""

from .binmetrics import ConfusionMatrix, auroc, brier, confusion, ece
from .names import clean_cell_name, load_synonyms
from .ontology import (
    ClusterScore,
    OntologyDag,
    ScoredAnnotation,
    annotation_accuracy,
    load_obo,
    map_to_clid,
    ontology_score,
)
from .treemetrics import (
    GED_BUDGET_SECONDS,
    LabeledGraph,
    graph_edit_distance,
    graph_from_tree,
    jaccard_nodes,
    mapping_cost,
    spectral_distance,
)
from .truth import load_annotation_truth, load_grn_labels, load_tree_truth

__all__ = [
    "ConfusionMatrix",
    "auroc",
    "brier",
    "confusion",
    "ece",
    "clean_cell_name",
    "load_synonyms",
    "ClusterScore",
    "OntologyDag",
    "ScoredAnnotation",
    "annotation_accuracy",
    "load_obo",
    "map_to_clid",
    "ontology_score",
    "GED_BUDGET_SECONDS",
    "LabeledGraph",
    "graph_edit_distance",
    "graph_from_tree",
    "jaccard_nodes",
    "mapping_cost",
    "spectral_distance",
    "load_annotation_truth",
    "load_grn_labels",
    "load_tree_truth",
]
