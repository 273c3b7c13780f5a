"""Shared expression pipeline: normalize, select genes, cluster, rank.

The steps follow the standard scRNA-seq recipe at batch-script scale:
library-size normalization and log1p for raw counts, highly-variable
gene selection by dispersion, PCA, a kNN graph, then Louvain community
detection at a caller-supplied resolution. Distances are computed
densely, which is fine for the dataset sizes this package targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np
from networkx.algorithms.community import louvain_communities
from scipy.spatial.distance import cdist

from .config import ClusteringConfig
from .io import ExpressionMatrix

NORMALIZE_TARGET = 1e4


def unique_gene_names(names) -> tuple[str, ...]:
    """Disambiguate duplicate symbols (case-insensitive) with -1, -2 suffixes.

    Suffixed candidates are re-checked against every name seen so far,
    so an input already containing "ACTB-1" cannot collide with the
    rename of a duplicate "Actb".
    """
    seen: set[str] = set()
    next_suffix: dict[str, int] = {}
    out = []
    for name in names:
        key = name.upper()
        candidate = name
        suffix = next_suffix.get(key, 0)
        while candidate.upper() in seen:
            suffix += 1
            candidate = f"{name}-{suffix}"
        next_suffix[key] = suffix
        seen.add(candidate.upper())
        out.append(candidate)
    return tuple(out)


def is_raw_counts(matrix: np.ndarray) -> bool:
    """Integral non-negative values with a spread beyond 0/1 look like counts."""
    if matrix.size == 0 or matrix.min() < 0:
        return False
    return bool(np.all(matrix == np.floor(matrix)) and matrix.max() > 1)


def normalize_log(matrix: np.ndarray) -> np.ndarray:
    sums = matrix.sum(axis=1, keepdims=True)
    sums[sums == 0] = 1.0
    return np.log1p(matrix * (NORMALIZE_TARGET / sums))


def select_hvg_indices(matrix: np.ndarray, names, n_hvg) -> list[int]:
    """Top genes by log-expression variance, original column order kept."""
    if n_hvg is None or n_hvg >= matrix.shape[1]:
        return list(range(matrix.shape[1]))
    var = matrix.var(axis=0)
    ranked = sorted(range(matrix.shape[1]), key=lambda j: (-var[j], names[j]))
    return sorted(ranked[:n_hvg])


def pca_coords(matrix: np.ndarray, n_pcs: int) -> np.ndarray:
    centered = matrix - matrix.mean(axis=0, keepdims=True)
    u, s, _ = np.linalg.svd(centered, full_matrices=False)
    keep = min(n_pcs, len(s))
    return u[:, :keep] * s[:keep]


def knn_graph(coords: np.ndarray, n_neighbors: int) -> nx.Graph:
    """Undirected union-of-neighborhoods graph with unit edge weights."""
    n = coords.shape[0]
    dist = cdist(coords, coords)
    np.fill_diagonal(dist, np.inf)
    k = min(n_neighbors, n - 1)
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    for i in range(n):
        # stable sort so distance ties resolve by cell index
        for j in np.argsort(dist[i], kind="stable")[:k]:
            graph.add_edge(i, int(j), weight=1.0)
    return graph


def cluster_labels(graph: nx.Graph, resolution: float, seed: int) -> np.ndarray:
    """Louvain communities relabeled contiguously, largest cluster first."""
    communities = louvain_communities(
        graph, weight="weight", resolution=resolution, seed=seed
    )
    ordered = sorted(communities, key=lambda c: (-len(c), min(c)))
    labels = np.empty(graph.number_of_nodes(), dtype=int)
    for cid, members in enumerate(ordered):
        for cell in members:
            labels[cell] = cid
    return labels


def rank_marker_genes(
    log_matrix: np.ndarray, labels: np.ndarray, names, k: int
) -> list[tuple[str, ...]]:
    """Per-cluster top-k genes by a Welch-style one-vs-rest statistic."""
    out = []
    for cid in range(labels.max() + 1):
        inside = log_matrix[labels == cid]
        outside = log_matrix[labels != cid]
        if len(outside) == 0:
            gap = inside.mean(axis=0)
        else:
            spread = np.sqrt(
                inside.var(axis=0) / len(inside)
                + outside.var(axis=0) / max(len(outside), 1)
                + 1e-9
            )
            gap = (inside.mean(axis=0) - outside.mean(axis=0)) / spread
        ranked = sorted(range(len(names)), key=lambda j: (-gap[j], names[j]))
        out.append(tuple(names[j] for j in ranked[:k]))
    return out


def expression_panel(
    log_matrix: np.ndarray, labels: np.ndarray, names, panel: tuple[str, ...]
) -> dict[str, dict[str, dict[str, float]]]:
    """Dotplot-style mean/fraction stats, every cluster x every panel gene."""
    col = {name: j for j, name in enumerate(names)}
    stats: dict[str, dict[str, dict[str, float]]] = {}
    for cid in range(labels.max() + 1):
        block = log_matrix[labels == cid]
        row = {}
        for gene in panel:
            values = block[:, col[gene]]
            row[gene] = {
                "mean_expression": round(float(values.mean()), 2),
                "fraction_expressing": min(
                    1.0, round(float((values > 0).mean()), 2)
                ),
            }
        stats[str(cid)] = row
    return stats


@dataclass(frozen=True)
class Clustered:
    """Pipeline output consumed by the sketch builders."""

    log_matrix: np.ndarray
    gene_names: tuple[str, ...]
    labels: np.ndarray
    graph: nx.Graph
    pca: np.ndarray
    was_raw: bool
    hvg_note: str

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1

    def cluster_sizes(self) -> list[int]:
        return [int((self.labels == cid).sum()) for cid in range(self.n_clusters)]


def run_pipeline(
    data: ExpressionMatrix, cfg: ClusteringConfig, resolution: float
) -> Clustered:
    names = unique_gene_names(data.gene_names)
    raw = is_raw_counts(data.matrix)
    log_all = normalize_log(data.matrix) if raw else np.asarray(data.matrix, float)
    keep = select_hvg_indices(log_all, names, cfg.n_hvg)
    log_matrix = log_all[:, keep]
    hvg_names = tuple(names[j] for j in keep)
    if len(keep) == len(names):
        hvg_note = f"all {len(names)} genes"
    else:
        hvg_note = f"the top {len(keep)} highly variable genes"
    coords = pca_coords(log_matrix, cfg.n_pcs)
    graph = knn_graph(coords, cfg.n_neighbors)
    labels = cluster_labels(graph, resolution, cfg.seed)
    return Clustered(log_matrix, hvg_names, labels, graph, coords, raw, hvg_note)
