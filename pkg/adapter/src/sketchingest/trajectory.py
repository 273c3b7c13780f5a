"""Trajectory sketch construction from an H5AD file with timepoints.

Lineage evidence is derived the classic way: cluster-to-cluster
connectivity from the cell kNN graph picks lineage edges via a maximum
spanning forest, and per-cell diffusion pseudotime anchored at the
earliest-timepoint cluster orders everything. The report text follows
the documented grammar, so the benchmark engine is agnostic to whether
it came from Monocle or from this pipeline.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Optional, Union

import networkx as nx
import numpy as np
from sketchbench.sketches import REDACTED_CONTEXT

from .annotation import processing_note, resolve_resolution
from .config import ClusteringConfig
from .errors import MissingTimepointColumn
from .io import read_h5ad
from .pipeline import Clustered, rank_marker_genes, run_pipeline
from .report import LineageReport, render
from .sidecar import load_context

PathLike = Union[str, Path]

TOP_GENES = 5  # trajectory sketches always carry five markers per cluster

DEFAULT_TIMEPOINT_KEY = "timepoint"

_NUMBER_RE = re.compile(r"(\d+(?:\.\d+)?)")


def timepoint_sort_key(label: str):
    """Order E10.5 before E12.5 numerically, falling back to text order."""
    match = _NUMBER_RE.search(label)
    if match:
        return (0, float(match.group(1)), label)
    return (1, 0.0, label)


def timepoint_shares(counts: dict[str, int]) -> dict[str, float]:
    """Fractions in units of 1e-4 via largest remainder, summing to 1."""
    items = [
        (label, counts[label])
        for label in sorted(counts, key=timepoint_sort_key)
        if counts[label] > 0
    ]
    total = sum(count for _, count in items)
    base = [count * 10000 // total for _, count in items]
    remainders = [count * 10000 % total for _, count in items]
    leftover = 10000 - sum(base)
    for idx in sorted(range(len(items)), key=lambda i: (-remainders[i], i))[:leftover]:
        base[idx] += 1
    return {label: units / 10000 for (label, _), units in zip(items, base)}


def cluster_connectivity(graph: nx.Graph, labels: np.ndarray) -> nx.Graph:
    """Cluster graph weighted by the number of kNN edges crossing clusters."""
    connectivity = nx.Graph()
    connectivity.add_nodes_from(range(int(labels.max()) + 1))
    for u, v in sorted(graph.edges()):
        a, b = int(labels[u]), int(labels[v])
        if a == b:
            continue
        if connectivity.has_edge(a, b):
            connectivity[a][b]["weight"] += 1.0
        else:
            connectivity.add_edge(a, b, weight=1.0)
    return connectivity


def diffusion_pseudotime(
    graph: nx.Graph, cells: list[int], root_cell: int
) -> dict[int, float]:
    """Distance from the root cell in scaled diffusion-map coordinates.

    Eigen decomposition of the symmetrically normalized adjacency gives
    the diffusion components; each is scaled by eigenvalue/(1-eigenvalue)
    before taking euclidean distances, and distances are normalized to
    [0, 1] within the component.
    """
    cells = sorted(cells)
    index = {c: i for i, c in enumerate(cells)}
    n = len(cells)
    if n == 1:
        return {cells[0]: 0.0}
    adjacency = np.zeros((n, n))
    for u, v in graph.subgraph(cells).edges():
        adjacency[index[u], index[v]] = adjacency[index[v], index[u]] = 1.0
    degree = adjacency.sum(axis=1)
    degree[degree == 0] = 1.0
    sym = adjacency / np.sqrt(np.outer(degree, degree))
    eigenvalues, eigenvectors = np.linalg.eigh(sym)
    eigenvalues, eigenvectors = eigenvalues[::-1], eigenvectors[:, ::-1]
    n_comps = min(10, n - 1)
    lam = eigenvalues[1 : n_comps + 1]
    # right eigenvectors of the random-walk transition matrix
    phi = eigenvectors[:, 1 : n_comps + 1] / np.sqrt(degree)[:, None]
    coords = phi * (lam / np.maximum(1.0 - lam, 1e-9))
    dist = np.linalg.norm(coords - coords[index[root_cell]], axis=1)
    if dist.max() > 0:
        dist = dist / dist.max()
    return {c: float(dist[index[c]]) for c in cells}


def medoid_cell(pca: np.ndarray, cells: list[int]) -> int:
    block = pca[cells]
    deltas = block[:, None, :] - block[None, :, :]
    totals = np.sqrt((deltas**2).sum(axis=2)).sum(axis=1)
    return cells[int(np.argmin(totals))]


def build_lineage(
    clustered: Clustered, timepoints: list[str]
) -> tuple[LineageReport, list[str]]:
    """Forest edges plus a global pseudotime ordering of cluster names."""
    labels = clustered.labels
    n_clusters = clustered.n_clusters
    sizes = clustered.cluster_sizes()
    names = [f"cluster {cid}" for cid in range(n_clusters)]

    all_stages = sorted(set(timepoints), key=timepoint_sort_key)
    earliest = all_stages[0]
    early_share = [
        sum(1 for cell in np.flatnonzero(labels == cid) if timepoints[cell] == earliest)
        / sizes[cid]
        for cid in range(n_clusters)
    ]

    connectivity = cluster_connectivity(clustered.graph, labels)
    forest = nx.maximum_spanning_tree(connectivity)

    pseudotime = [0.0] * n_clusters
    roots: list[int] = []
    for component in sorted(
        nx.connected_components(connectivity), key=lambda comp: min(comp)
    ):
        members = sorted(component)
        root = min(members, key=lambda cid: (-early_share[cid], -sizes[cid], cid))
        roots.append(root)
        cells = [int(c) for c in np.flatnonzero(np.isin(labels, members))]
        root_cells = [int(c) for c in np.flatnonzero(labels == root)]
        dpt = diffusion_pseudotime(
            clustered.graph, cells, medoid_cell(clustered.pca, root_cells)
        )
        for cid in members:
            member_cells = np.flatnonzero(labels == cid)
            pseudotime[cid] = float(
                np.mean([dpt[int(c)] for c in member_cells])
            )

    order_ids = sorted(
        range(n_clusters), key=lambda cid: (pseudotime[cid], -sizes[cid], cid)
    )
    position = {cid: i for i, cid in enumerate(order_ids)}

    edges: list[tuple[str, str]] = []
    for root in sorted(roots, key=lambda cid: position[cid]):
        stack = [root]
        visited = {root}
        while stack:
            parent = stack.pop()
            children = sorted(
                (c for c in forest.neighbors(parent) if c not in visited),
                key=lambda cid: position[cid],
                reverse=True,  # stack pops smallest position first
            )
            for child in children:
                visited.add(child)
            edges.extend(
                (names[parent], names[child]) for child in reversed(children)
            )
            stack.extend(children)

    report = LineageReport(tuple(edges), tuple(names[cid] for cid in order_ids))
    return report, all_stages


def make_trajectory_sketch(
    h5ad_path: PathLike,
    resolution: Optional[float] = None,
    dataset_id: Optional[str] = None,
    timepoint_key: str = DEFAULT_TIMEPOINT_KEY,
    sidecar: Optional[PathLike] = None,
    cfg: ClusteringConfig = ClusteringConfig(),
) -> dict:
    """Cluster, derive lineage evidence, and emit a trajectory sketch dict."""
    res = resolve_resolution(resolution, dataset_id)
    data = read_h5ad(h5ad_path)
    if timepoint_key not in data.obs:
        raise MissingTimepointColumn(
            f"cell metadata has no {timepoint_key!r} column"
        )
    timepoints = [str(v) for v in data.obs[timepoint_key]]
    clustered = run_pipeline(data, cfg, res)
    markers = rank_marker_genes(
        clustered.log_matrix, clustered.labels, clustered.gene_names, TOP_GENES
    )

    percentages: dict[str, dict[str, float]] = {}
    for cid in range(clustered.n_clusters):
        counts: dict[str, int] = {}
        for cell in np.flatnonzero(clustered.labels == cid):
            counts[timepoints[cell]] = counts.get(timepoints[cell], 0) + 1
        percentages[str(cid)] = timepoint_shares(counts)

    lineage, stages = build_lineage(clustered, timepoints)

    context = load_context(h5ad_path, sidecar)
    if context != REDACTED_CONTEXT:
        if len(stages) == 1:
            sampled = f"All cells were sampled at timepoint {stages[0]}."
        else:
            sampled = (
                f"Cells were sampled at {len(stages)} timepoints "
                f"({stages[0]} to {stages[-1]})."
            )
        context = (
            f"{context} {sampled} {processing_note(clustered, res, 'Marker lists')}"
        )
    return {
        "schema_version": "1",
        "kind": "trajectory",
        "context": context,
        "clusters": [
            {"cluster_id": cid, "top_genes": list(top)}
            for cid, top in enumerate(markers)
        ],
        "timepoint_percentages": percentages,
        "monocle_report": render(lineage),
    }
