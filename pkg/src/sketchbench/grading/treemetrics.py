"""Trajectory-tree grading: node Jaccard, graph edit distance, and
normalized-Laplacian spectral distance.

Predicted and truth trees are compared as undirected labeled graphs.
The synthetic "root" node is kept for GED and spectral distance (both
sides carry it) but dropped for node Jaccard, which is over cell types
only.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from ..errors import BothEmpty, EmptyGraph, InvariantError
from ..parsing import ROOT, TrajectoryTree

GED_BUDGET_SECONDS = 10.0


@dataclass(frozen=True)
class LabeledGraph:
    """Undirected simple graph; node identity is the label."""

    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]  # endpoint pairs, lexicographically sorted

    def __post_init__(self):
        for u, v in self.edges:
            if u == v:
                raise InvariantError(f"self-loop on {u!r}")
            if (u, v) != tuple(sorted((u, v))):
                raise InvariantError(f"edge {(u, v)!r} not in sorted form")
            if u not in self.nodes or v not in self.nodes:
                raise InvariantError(f"edge {(u, v)!r} has unknown endpoint")

    @classmethod
    def build(cls, nodes, edges) -> "LabeledGraph":
        return cls(
            nodes=frozenset(nodes),
            edges=frozenset(tuple(sorted(e)) for e in edges),
        )


def graph_from_tree(tree: TrajectoryTree, include_root: bool = True) -> LabeledGraph:
    nodes = set(tree.nodes)
    edges = list(tree.edges())
    if not include_root:
        nodes.discard(ROOT)
        edges = [e for e in edges if ROOT not in e]
    return LabeledGraph.build(nodes, edges)


def jaccard_nodes(a: LabeledGraph, b: LabeledGraph) -> float:
    """Set Jaccard over node labels, synthetic root excluded."""
    labels_a = a.nodes - {ROOT}
    labels_b = b.nodes - {ROOT}
    union = labels_a | labels_b
    if not union:
        raise BothEmpty("both graphs empty after root removal")
    return len(labels_a & labels_b) / len(union)


# -------------------------------------------------------------- spectral


def _spectrum(graph: LabeledGraph) -> np.ndarray:
    """Ascending eigenvalues of the symmetric normalized Laplacian.

    Isolated nodes contribute an all-zero row/column (eigenvalue 0).
    """
    nodes = sorted(graph.nodes)
    n = len(nodes)
    index = {v: i for i, v in enumerate(nodes)}
    adjacency = np.zeros((n, n))
    for u, v in graph.edges:
        adjacency[index[u], index[v]] = 1.0
        adjacency[index[v], index[u]] = 1.0
    degree = adjacency.sum(axis=1)
    inv_sqrt = np.where(degree > 0, 1.0 / np.sqrt(np.maximum(degree, 1e-300)), 0.0)
    laplacian = np.diag((degree > 0).astype(float)) - (
        adjacency * inv_sqrt[:, None] * inv_sqrt[None, :]
    )
    return np.linalg.eigvalsh(laplacian)


def spectral_distance(a: LabeledGraph, b: LabeledGraph) -> float:
    """Euclidean distance between ordered Laplacian spectra.

    The shorter spectrum is zero-padded and re-sorted so both sides
    have equal length.
    """
    if not a.nodes or not b.nodes:
        raise EmptyGraph("spectral distance needs nonempty graphs")
    spec_a = _spectrum(a)
    spec_b = _spectrum(b)
    size = max(len(spec_a), len(spec_b))
    spec_a = np.sort(np.pad(spec_a, (0, size - len(spec_a))))
    spec_b = np.sort(np.pad(spec_b, (0, size - len(spec_b))))
    return float(np.linalg.norm(spec_a - spec_b))


# ------------------------------------------------------------------- GED


def _adjacency(graph: LabeledGraph) -> dict[str, frozenset[str]]:
    out: dict[str, set[str]] = {v: set() for v in graph.nodes}
    for u, v in graph.edges:
        out[u].add(v)
        out[v].add(u)
    return {v: frozenset(nbrs) for v, nbrs in out.items()}


def mapping_cost(
    a: LabeledGraph, b: LabeledGraph, mapping: Mapping[str, Optional[str]]
) -> int:
    """Total unit-cost edits implied by a complete node mapping.

    Node ops: deletion 1, insertion 1, label substitution 1 (0 when the
    labels agree). Edge ops are forced once nodes are decided: an edge
    mismatch between mapped pairs, an edge losing an endpoint, and an
    unmatched edge of b each cost 1.
    """
    adj_a = _adjacency(a)
    adj_b = _adjacency(b)
    a_nodes = sorted(a.nodes)
    used = {w for w in mapping.values() if w is not None}
    cost = 0
    for v in a_nodes:
        w = mapping[v]
        if w is None:
            cost += 1
        elif w != v:
            cost += 1
    cost += len(b.nodes) - len(used)
    for u, v in itertools.combinations(a_nodes, 2):
        edge_a = v in adj_a[u]
        map_u, map_v = mapping[u], mapping[v]
        if map_u is None or map_v is None:
            cost += 1 if edge_a else 0
        else:
            edge_b = map_v in adj_b[map_u]
            cost += 1 if edge_a != edge_b else 0
    for x, y in b.edges:
        if x not in used or y not in used:
            cost += 1
    return cost


def _greedy_upper_bound(a: LabeledGraph, b: LabeledGraph) -> int:
    """Cheap complete solutions to seed the anytime bound."""
    common = sorted(a.nodes & b.nodes)
    rest_a = sorted(a.nodes - b.nodes)
    rest_b = sorted(b.nodes - a.nodes)
    paired: dict[str, Optional[str]] = {v: v for v in common}
    for v, w in zip(rest_a, rest_b):
        paired[v] = w
    for v in rest_a[len(rest_b) :]:
        paired[v] = None
    exact_only: dict[str, Optional[str]] = {
        v: (v if v in b.nodes else None) for v in a.nodes
    }
    return min(mapping_cost(a, b, paired), mapping_cost(a, b, exact_only))


def graph_edit_distance(
    a: LabeledGraph, b: LabeledGraph, budget: float = GED_BUDGET_SECONDS
) -> tuple[int, bool]:
    """Anytime best-first search over node assignments, unit costs.

    Returns (cost, exact). exact=True means the search closed; on
    budget exhaustion the best upper bound found so far is returned
    with exact=False.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    deadline = time.monotonic() + budget

    a_nodes = sorted(a.nodes)
    b_nodes = sorted(b.nodes)
    index_a = {v: i for i, v in enumerate(a_nodes)}
    adj_a = _adjacency(a)
    adj_b = _adjacency(b)
    count_a = len(a_nodes)
    count_b = len(b_nodes)

    best_upper = _greedy_upper_bound(a, b)

    def bound(i: int, used: frozenset[str], ea_rem: int, eb_rem: int) -> int:
        remaining_a = set(a_nodes[i:])
        remaining_b = set(b_nodes) - used
        matchable = len(remaining_a & remaining_b)
        node_bound = max(len(remaining_a), len(remaining_b)) - matchable
        return node_bound + abs(ea_rem - eb_rem)

    # state: (f, tiebreak, g, i, assignment tuple, used, ea_rem, eb_rem)
    counter = itertools.count()
    start_f = bound(0, frozenset(), len(a.edges), len(b.edges))
    heap = [
        (start_f, next(counter), 0, 0, (), frozenset(), len(a.edges), len(b.edges))
    ]
    ticks = 0

    while heap:
        ticks += 1
        if ticks % 64 == 0 and time.monotonic() > deadline:
            return best_upper, False
        f, _, g, i, assignment, used, ea_rem, eb_rem = heapq.heappop(heap)
        if f >= best_upper and not (f == best_upper and i == count_a):
            continue
        if i == count_a:
            # bound() is exact here: remaining b nodes and edges must
            # all be inserted, so f is the full completion cost.
            return min(f, best_upper), True

        v = a_nodes[i]
        ea_next = ea_rem - sum(1 for u in adj_a[v] if index_a[u] < i)
        prefix = a_nodes[:i]

        def edge_delta(w: Optional[str]) -> int:
            delta = 0
            for j, u in enumerate(prefix):
                edge_a = u in adj_a[v]
                map_u = assignment[j]
                if w is None or map_u is None:
                    delta += 1 if edge_a else 0
                else:
                    edge_b = map_u in adj_b[w]
                    delta += 1 if edge_a != edge_b else 0
            return delta

        for w in b_nodes:
            if w in used:
                continue
            g_next = g + (0 if w == v else 1) + edge_delta(w)
            used_next = used | {w}
            eb_next = eb_rem - sum(1 for x in adj_b[w] if x in used)
            f_next = g_next + bound(i + 1, used_next, ea_next, eb_next)
            if f_next < best_upper or (f_next == best_upper and i + 1 == count_a):
                heapq.heappush(
                    heap,
                    (
                        f_next,
                        next(counter),
                        g_next,
                        i + 1,
                        assignment + (w,),
                        used_next,
                        ea_next,
                        eb_next,
                    ),
                )

        g_next = g + 1 + edge_delta(None)
        f_next = g_next + bound(i + 1, used, ea_next, eb_rem)
        if f_next < best_upper or (f_next == best_upper and i + 1 == count_a):
            heapq.heappush(
                heap,
                (
                    f_next,
                    next(counter),
                    g_next,
                    i + 1,
                    assignment + (None,),
                    used,
                    ea_next,
                    eb_rem,
                ),
            )

    # heap exhausted: nothing beats the greedy/incumbent bound
    return best_upper, True
