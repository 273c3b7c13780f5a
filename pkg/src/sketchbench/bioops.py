"""Deterministic omics operators over sketch data.

These are the primitive computations a reasoning pipeline may invoke
between model calls: simulated dot-plot readouts, desk-scale
differential expression, GO BP overlap, and the two seeded
perturbations used by ablations. Everything here is pure given
(inputs, seed).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from .errors import ReportGrammarError, UnknownCluster
from .rng import PortableRng
from .sketches import ABSENT, ClusterGeneStats

# Engine defaults for "highly expressed" on log-normalized means.
HIGH_MEAN_THRESHOLD = 0.5
HIGH_FRACTION_THRESHOLD = 0.25
# Cosine similarity over the queried gene set at or above this flags a
# cluster pair as near-identical.
SIMILARITY_THRESHOLD = 0.98
DE_TOP_N = 5


# ------------------------------------------------------------------ GO table


@dataclass(frozen=True, order=True)
class GoTerm:
    term_id: str
    name: str


class GoTable:
    """Gene -> GO BP term associations, keyed by uppercase symbol."""

    def __init__(self, entries: Mapping[str, Iterable[GoTerm]]):
        self.entries: dict[str, frozenset[GoTerm]] = {
            gene.upper(): frozenset(terms) for gene, terms in entries.items()
        }

    def __eq__(self, other):
        return isinstance(other, GoTable) and self.entries == other.entries

    def genes(self) -> list[str]:
        return sorted(self.entries)

    def terms_for(self, gene: str) -> frozenset[GoTerm]:
        return self.entries.get(gene.upper(), frozenset())

    def id_table(self) -> dict[str, frozenset[str]]:
        """Term-id view, the shape embedded in GRN sketches."""
        return {
            gene: frozenset(t.term_id for t in terms)
            for gene, terms in self.entries.items()
        }

    @classmethod
    def load_tsv(cls, path: Union[str, Path]) -> "GoTable":
        """Read gene TAB term_id TAB term_name rows; '#' lines skipped."""
        entries: dict[str, set[GoTerm]] = {}
        for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ReportGrammarError(
                    f"{path}:{lineno}: expected 3 tab-separated fields"
                )
            gene, term_id, name = (p.strip() for p in parts)
            if not gene or not term_id or not name:
                raise ReportGrammarError(f"{path}:{lineno}: empty field")
            entries.setdefault(gene.upper(), set()).add(GoTerm(term_id, name))
        return cls(entries)

    def save_tsv(self, path: Union[str, Path]) -> None:
        lines = []
        for gene in self.genes():
            for term in sorted(self.entries[gene]):
                lines.append(f"{gene}\t{term.term_id}\t{term.name}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class GoOverlap:
    shared_terms: frozenset[str]  # term ids
    rendered: str  # "; "-joined sorted term names, or "none"


def go_overlap(tf: str, target: str, table: GoTable) -> GoOverlap:
    """Shared GO BP terms between a TF and its putative target."""
    shared = table.terms_for(tf) & table.terms_for(target)
    if shared:
        rendered = "; ".join(sorted(t.name for t in shared))
    else:
        rendered = "none"
    return GoOverlap(
        shared_terms=frozenset(t.term_id for t in shared), rendered=rendered
    )


def shuffle_go(
    table: GoTable, seed: int, preserve_cardinality: bool = False
) -> GoTable:
    """Seeded perturbation of gene -> term-set associations.

    Default mode permutes whole term-sets across gene keys (the multiset
    of term-sets is preserved exactly). Cardinality-preserving mode
    instead redraws, per gene, a set of the original size from the
    global term vocabulary. Genes iterate in sorted order so the result
    depends only on (table, seed).
    """
    genes = table.genes()
    rng = PortableRng(seed)
    if not preserve_cardinality:
        order = rng.permutation(len(genes))
        sets = [table.entries[g] for g in genes]
        return GoTable({genes[i]: sets[order[i]] for i in range(len(genes))})
    vocabulary = sorted({t for terms in table.entries.values() for t in terms})
    redrawn = {}
    for gene in genes:
        want = min(len(table.entries[gene]), len(vocabulary))
        redrawn[gene] = frozenset(rng.sample(vocabulary, want))
    return GoTable(redrawn)


# ------------------------------------------------------- dotplot and DE


@dataclass(frozen=True)
class DiffEntry:
    gene: str
    delta: float  # mean(first cluster) - mean(second cluster)

    @property
    def direction(self) -> str:
        if self.delta > 0:
            return "a"
        if self.delta < 0:
            return "b"
        return "equal"


@dataclass(frozen=True)
class DiffResult:
    cluster_a: int
    cluster_b: int
    entries: tuple[DiffEntry, ...]  # top-n by |delta|, ties by symbol

    @property
    def up_in_a(self) -> tuple[DiffEntry, ...]:
        return tuple(e for e in self.entries if e.delta > 0)

    @property
    def up_in_b(self) -> tuple[DiffEntry, ...]:
        return tuple(e for e in self.entries if e.delta < 0)


def similar_cluster_de(
    stats: ClusterGeneStats, pair: tuple[int, int], n: int = DE_TOP_N
) -> DiffResult:
    """Desk-scale differential expression between two clusters.

    Genes (union of both clusters' measured panels) are ranked by
    |mean_a - mean_b| descending, ties broken by symbol; a gene missing
    from one side contributes mean 0.0 there.
    """
    cluster_a, cluster_b = pair
    known = set(stats.cluster_ids())
    for cid in (cluster_a, cluster_b):
        if cid not in known:
            raise UnknownCluster(f"cluster {cid} not in expression stats")

    spellings: dict[str, str] = {}
    for cid in (cluster_a, cluster_b):
        for gene in sorted(stats.genes_for(cid)):
            spellings.setdefault(gene.upper(), gene)

    def mean_of(cid: int, gene: str) -> float:
        stat = stats.lookup(cid, gene)
        return 0.0 if stat is ABSENT else stat.mean_expression

    entries = [
        DiffEntry(gene=spell, delta=mean_of(cluster_a, spell) - mean_of(cluster_b, spell))
        for spell in spellings.values()
    ]
    entries.sort(key=lambda e: (-abs(e.delta), e.gene.upper()))
    return DiffResult(cluster_a, cluster_b, tuple(entries[: max(n, 0)]))


@dataclass(frozen=True)
class DotplotSummary:
    """Simulated dot-plot readout for a proposed marker panel.

    success_list and fail_list partition the queried genes; genes not
    measured anywhere also appear in absent_genes.
    """

    success_list: tuple[str, ...]  # high in at least one cluster
    fail_list: tuple[str, ...]  # high nowhere
    matched: Mapping[int, tuple[str, ...]]  # cluster -> genes high there
    empty_keys: tuple[int, ...]  # clusters with no matched gene
    similar_clusters: tuple[DiffResult, ...]
    absent_genes: frozenset[str]


def _cosine(u: Sequence[float], v: Sequence[float]) -> float:
    # all-zero vectors mean "panel says nothing here": no flag
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


def dotplot_summary(
    stats: ClusterGeneStats,
    genes: Sequence[str],
    high_threshold: tuple[float, float] = (HIGH_MEAN_THRESHOLD, HIGH_FRACTION_THRESHOLD),
    similarity_threshold: float = SIMILARITY_THRESHOLD,
    de_top_n: int = DE_TOP_N,
) -> DotplotSummary:
    """Classify a queried gene panel per cluster.

    A gene is "high" in a cluster iff mean_expression >= tau_m and
    fraction_expressing >= tau_f. Cluster pairs whose mean-expression
    vectors over the queried panel have cosine similarity at or above
    similarity_threshold are flagged with their top differential genes.
    """
    if not genes:
        raise ValueError("queried gene list must be nonempty")
    tau_m, tau_f = high_threshold

    queried: list[str] = []
    seen = set()
    for gene in genes:
        key = gene.upper()
        if key not in seen:
            seen.add(key)
            queried.append(gene)

    cluster_ids = stats.cluster_ids()
    matched: dict[int, list[str]] = {cid: [] for cid in cluster_ids}
    success: list[str] = []
    fail: list[str] = []
    absent: set[str] = set()

    for gene in queried:
        measured_anywhere = False
        high_somewhere = False
        for cid in cluster_ids:
            stat = stats.lookup(cid, gene)
            if stat is ABSENT:
                continue
            measured_anywhere = True
            if stat.mean_expression >= tau_m and stat.fraction_expressing >= tau_f:
                matched[cid].append(gene)
                high_somewhere = True
        if high_somewhere:
            success.append(gene)
        else:
            fail.append(gene)
        if not measured_anywhere:
            absent.add(gene)

    empty = tuple(cid for cid in cluster_ids if not matched[cid])

    vectors = {
        cid: [
            0.0
            if (stat := stats.lookup(cid, gene)) is ABSENT
            else stat.mean_expression
            for gene in queried
        ]
        for cid in cluster_ids
    }
    similar: list[DiffResult] = []
    for i, a in enumerate(cluster_ids):
        for b in cluster_ids[i + 1 :]:
            if _cosine(vectors[a], vectors[b]) >= similarity_threshold:
                similar.append(similar_cluster_de(stats, (a, b), de_top_n))

    return DotplotSummary(
        success_list=tuple(success),
        fail_list=tuple(fail),
        matched={cid: tuple(genes_) for cid, genes_ in matched.items()},
        empty_keys=empty,
        similar_clusters=tuple(similar),
        absent_genes=frozenset(absent),
    )


# ------------------------------------------------- lineage diagnostic report

# Grammar (ABNF sketch lives in docs/monocle_report.md):
#   report  = header LF "edges:" *(LF edge) LF "pseudotime_order:" LF order
#   header  = "clusters: " count "; edges: " count
#   edge    = "  " name " -> " name
#   order   = "  " name *(" < " name)
# Names may contain spaces but not the separator sequences.

_HEADER_RE = re.compile(r"^clusters: (\d+); edges: (\d+)$")


@dataclass(frozen=True)
class MonocleReport:
    cluster_count: int
    edges: tuple[tuple[str, str], ...]
    pseudotime_order: tuple[str, ...]


def parse_monocle_report(text: str) -> MonocleReport:
    lines = text.strip("\n").split("\n")
    if len(lines) < 4:
        raise ReportGrammarError("report needs header, edges:, pseudotime_order:")
    header = _HEADER_RE.match(lines[0])
    if not header:
        raise ReportGrammarError(f"bad header line: {lines[0]!r}")
    cluster_count, edge_count = int(header.group(1)), int(header.group(2))
    if lines[1] != "edges:":
        raise ReportGrammarError(f"expected 'edges:' on line 2, got {lines[1]!r}")

    edges: list[tuple[str, str]] = []
    i = 2
    while i < len(lines) and lines[i] != "pseudotime_order:":
        line = lines[i]
        if not line.startswith("  ") or " -> " not in line:
            raise ReportGrammarError(f"bad edge line: {line!r}")
        src, sep, dst = line[2:].partition(" -> ")
        if not src or not dst or " -> " in dst:
            raise ReportGrammarError(f"bad edge line: {line!r}")
        edges.append((src, dst))
        i += 1
    if i >= len(lines) - 1 or lines[i] != "pseudotime_order:":
        raise ReportGrammarError("missing pseudotime_order: section")
    order_line = lines[i + 1]
    if i + 2 != len(lines) or not order_line.startswith("  "):
        raise ReportGrammarError("pseudotime_order must be one indented line, last")
    order = tuple(order_line[2:].split(" < "))
    if any(not name for name in order):
        raise ReportGrammarError("empty name in pseudotime order")

    if len(edges) != edge_count:
        raise ReportGrammarError(
            f"header declares {edge_count} edges, found {len(edges)}"
        )
    if len(set(order)) != len(order):
        raise ReportGrammarError("pseudotime order repeats a cluster name")
    if len(order) != cluster_count:
        raise ReportGrammarError(
            f"header declares {cluster_count} clusters, order lists {len(order)}"
        )
    vocabulary = set(order)
    for src, dst in edges:
        if src not in vocabulary or dst not in vocabulary:
            raise ReportGrammarError(f"edge endpoint not in pseudotime order: {src} -> {dst}")
    return MonocleReport(cluster_count, tuple(edges), order)


def render_monocle_report(report: MonocleReport) -> str:
    lines = [
        f"clusters: {report.cluster_count}; edges: {len(report.edges)}",
        "edges:",
    ]
    lines.extend(f"  {src} -> {dst}" for src, dst in report.edges)
    lines.append("pseudotime_order:")
    lines.append("  " + " < ".join(report.pseudotime_order))
    return "\n".join(lines)


def _permute(items: Sequence, seed: int) -> list:
    """Reorder by the documented portable permutation for this seed."""
    order = PortableRng(seed).permutation(len(items))
    return [items[j] for j in order]


def corrupt_monocle(report: str, seed: int) -> str:
    """Ablation: scramble lineage structure, keep the report shape.

    Edge endpoints (flattened) and the pseudotime ordering are each
    permuted by a fresh seeded generator, so section headers, counts,
    and the cluster-name vocabulary survive intact.
    """
    parsed = parse_monocle_report(report)
    flat: list[str] = [name for edge in parsed.edges for name in edge]
    shuffled = _permute(flat, seed)
    new_edges = tuple(
        (shuffled[2 * k], shuffled[2 * k + 1]) for k in range(len(parsed.edges))
    )
    new_order = tuple(_permute(list(parsed.pseudotime_order), seed))
    return render_monocle_report(
        MonocleReport(parsed.cluster_count, new_edges, new_order)
    )
