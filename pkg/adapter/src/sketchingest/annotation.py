"""Annotation sketch construction from an H5AD file.

The sketch carries each cluster's ranked marker genes plus a
dotplot-style stats table covering every cluster x every panel gene,
where the panel is the union of all clusters' top markers. The free
text context is the sidecar description followed by a processing note
recording normalization, the clustering resolution, and which genes
the statistics cover.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union

from sketchbench.sketches import REDACTED_CONTEXT, SUPPORTED_MARKER_K

from .config import ClusteringConfig, pinned_resolution
from .errors import InputFormatError, UnsupportedMarkerCount
from .io import read_h5ad
from .pipeline import Clustered, expression_panel, rank_marker_genes, run_pipeline
from .sidecar import load_context

PathLike = Union[str, Path]


def resolve_resolution(
    resolution: Optional[float], dataset_id: Optional[str]
) -> float:
    if resolution is not None:
        if resolution <= 0:
            raise InputFormatError("resolution must be positive")
        return float(resolution)
    if dataset_id is not None:
        return pinned_resolution(dataset_id)
    raise InputFormatError("give a clustering resolution or a pinned dataset id")


def processing_note(
    clustered: Clustered, resolution: float, panel_noun: str
) -> str:
    norm = (
        "library-size normalized and log1p transformed"
        if clustered.was_raw
        else "already normalized"
    )
    return (
        f"Counts were {norm}; Louvain clustering at resolution {resolution:g} "
        f"yielded {clustered.n_clusters} clusters. "
        f"{panel_noun} cover {clustered.hvg_note}."
    )


def make_annotation_sketch(
    h5ad_path: PathLike,
    k: int = 10,
    resolution: Optional[float] = None,
    dataset_id: Optional[str] = None,
    sidecar: Optional[PathLike] = None,
    cfg: ClusteringConfig = ClusteringConfig(),
) -> dict:
    """Cluster an expression matrix and summarize it as a sketch dict."""
    if k not in SUPPORTED_MARKER_K:
        raise UnsupportedMarkerCount(
            f"marker list length {k} not in {SUPPORTED_MARKER_K}"
        )
    res = resolve_resolution(resolution, dataset_id)
    data = read_h5ad(h5ad_path)
    clustered = run_pipeline(data, cfg, res)
    markers = rank_marker_genes(
        clustered.log_matrix, clustered.labels, clustered.gene_names, k
    )

    # dotplot panel: union of every cluster's top genes, first-seen order
    panel: list[str] = []
    seen: set[str] = set()
    for top in markers:
        for gene in top:
            if gene not in seen:
                seen.add(gene)
                panel.append(gene)
    stats = expression_panel(
        clustered.log_matrix, clustered.labels, clustered.gene_names, tuple(panel)
    )

    sizes = clustered.cluster_sizes()
    clusters = []
    for cid, top in enumerate(markers):
        entry: dict = {"cluster_id": cid, "top_genes": list(top)}
        if len(top) < k:
            entry["sparse"] = True
        entry["cell_count"] = sizes[cid]
        clusters.append(entry)

    context = load_context(h5ad_path, sidecar)
    if context != REDACTED_CONTEXT:
        context = f"{context} {processing_note(clustered, res, 'Marker statistics')}"
    return {
        "schema_version": "1",
        "kind": "annotation",
        "context": context,
        "marker_k": k,
        "cluster_count": clustered.n_clusters,
        "clusters": clusters,
        "expression_stats": stats,
    }
