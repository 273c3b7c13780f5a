"""Cell-ontology DAG, name resolution, and the 1 / 0.5 / 0 annotation
score.

The ontology ships as an OBO flat file of which only id, name, and
is_a stanza lines are read. Scoring: exact CLID overlap is full
credit, overlap with transitive parents or children of a truth CLID is
half credit, anything else is zero.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Union

from ..errors import EmptyTruth, InvariantError, ParseError
from .names import clean_cell_name

_TERM_HEADER = "[Term]"
_STANZA_RE = re.compile(r"^\[[^\]]+\]$")


@dataclass(frozen=True)
class OntologyDag:
    """Terms plus is_a edges (child -> parents) and a name index."""

    terms: frozenset[str]
    parents: Mapping[str, frozenset[str]]
    name_index: Mapping[str, frozenset[str]]  # cleaned name -> CLIDs
    children: Mapping[str, frozenset[str]] = field(init=False)

    def __post_init__(self):
        child_map: dict[str, set[str]] = {}
        for child, parent_set in self.parents.items():
            if child not in self.terms:
                raise InvariantError(f"edge child {child} is not a known term")
            for parent in parent_set:
                if parent not in self.terms:
                    raise InvariantError(f"edge parent {parent} is not a known term")
                child_map.setdefault(parent, set()).add(child)
        object.__setattr__(
            self,
            "children",
            {term: frozenset(kids) for term, kids in child_map.items()},
        )
        self._assert_acyclic()

    def _assert_acyclic(self):
        seen: dict[str, int] = {}  # 1 = on stack, 2 = done

        def visit(term: str, stack: list[str]):
            state = seen.get(term)
            if state == 1:
                cycle = " -> ".join(stack + [term])
                raise InvariantError(f"is_a cycle: {cycle}")
            if state == 2:
                return
            seen[term] = 1
            for parent in self.parents.get(term, ()):
                visit(parent, stack + [term])
            seen[term] = 2

        for term in sorted(self.terms):
            visit(term, [])

    def ancestors(self, clid: str) -> frozenset[str]:
        """Transitive is_a parents, excluding the term itself."""
        out: set[str] = set()
        frontier = list(self.parents.get(clid, ()))
        while frontier:
            node = frontier.pop()
            if node not in out:
                out.add(node)
                frontier.extend(self.parents.get(node, ()))
        return frozenset(out)

    def descendants(self, clid: str) -> frozenset[str]:
        """Transitive is_a children, excluding the term itself."""
        out: set[str] = set()
        frontier = list(self.children.get(clid, ()))
        while frontier:
            node = frontier.pop()
            if node not in out:
                out.add(node)
                frontier.extend(self.children.get(node, ()))
        return frozenset(out)

    def relatives(self, clid: str) -> frozenset[str]:
        return self.ancestors(clid) | self.descendants(clid)


def load_obo(path: Union[str, Path]) -> OntologyDag:
    """Parse an OBO flat file, reading only id, name, and is_a lines."""
    terms: set[str] = set()
    parents: dict[str, set[str]] = {}
    names: dict[str, set[str]] = {}

    current_id: Optional[str] = None
    in_term = False
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = line.strip()
        if _STANZA_RE.match(line):
            in_term = line == _TERM_HEADER
            current_id = None
            continue
        if not in_term or not line or line.startswith("!"):
            continue
        key, sep, value = line.partition(":")
        if not sep:
            continue
        value = value.split(" ! ", 1)[0].strip()
        if key == "id":
            current_id = value
            terms.add(value)
        elif key == "name":
            if current_id is None:
                raise ParseError(f"{path}:{lineno}: name before id")
            names.setdefault(clean_cell_name(value), set()).add(current_id)
        elif key == "is_a":
            if current_id is None:
                raise ParseError(f"{path}:{lineno}: is_a before id")
            parents.setdefault(current_id, set()).add(value)

    return OntologyDag(
        terms=frozenset(terms),
        parents={child: frozenset(p) for child, p in parents.items()},
        name_index={name: frozenset(ids) for name, ids in names.items()},
    )


def map_to_clid(
    name: str, dag: OntologyDag, unmapped: Optional[list[str]] = None
) -> frozenset[str]:
    """Resolve a cleaned name to CLIDs; misses land in `unmapped`."""
    hit = dag.name_index.get(name)
    if hit:
        return hit
    if unmapped is not None:
        unmapped.append(name)
    return frozenset()


def ontology_score(
    pred_clids: frozenset[str], truth_clids: frozenset[str], dag: OntologyDag
) -> float:
    """1.0 exact CLID overlap, 0.5 parent/child overlap, else 0.0."""
    if not pred_clids:
        return 0.0
    if pred_clids & truth_clids:
        return 1.0
    relatives: set[str] = set()
    for clid in truth_clids:
        relatives |= dag.relatives(clid)
    if pred_clids & relatives:
        return 0.5
    return 0.0


@dataclass(frozen=True)
class ClusterScore:
    cluster_id: int
    predicted: Optional[str]  # raw predicted label, None if missing
    truth: str
    pred_clids: frozenset[str]
    truth_clids: frozenset[str]
    score: float


@dataclass(frozen=True)
class ScoredAnnotation:
    clusters: tuple[ClusterScore, ...]
    mean: float
    unmapped: tuple[str, ...]
    # Report-only diagnostic: zero-scored clusters whose CLIDs still
    # share an ancestor (broad-type agreement). Never affects scores.
    broad_type_notes: tuple[str, ...]


def annotation_accuracy(
    pred: Mapping[int, str],
    truth: Mapping[int, str],
    dag: OntologyDag,
    synonyms: Optional[Mapping[str, str]] = None,
) -> ScoredAnnotation:
    """Clean, map, and score every truth cluster; average the scores.

    Clusters absent from the prediction score 0.0. When the truth label
    itself resolves to no CLID, exact equality of cleaned names stands
    in for the exact-match rule (half credit is impossible then).
    """
    if not truth:
        raise EmptyTruth("truth annotation has no clusters")

    unmapped: list[str] = []
    scored: list[ClusterScore] = []
    notes: list[str] = []
    for cluster_id in sorted(truth):
        truth_raw = truth[cluster_id]
        truth_name = clean_cell_name(truth_raw, synonyms)
        truth_clids = map_to_clid(truth_name, dag, unmapped)
        pred_raw = pred.get(cluster_id)
        if pred_raw is None:
            scored.append(
                ClusterScore(cluster_id, None, truth_raw, frozenset(), truth_clids, 0.0)
            )
            continue
        pred_name = clean_cell_name(pred_raw, synonyms)
        pred_clids = map_to_clid(pred_name, dag, unmapped)
        if truth_clids:
            score = ontology_score(pred_clids, truth_clids, dag)
        else:
            score = 1.0 if pred_name == truth_name else 0.0
        if score == 0.0 and pred_clids and truth_clids:
            shared = _shared_ancestry(pred_clids, truth_clids, dag)
            if shared:
                notes.append(
                    f"cluster {cluster_id}: zero score but shared broad type "
                    f"{min(shared)}"
                )
        scored.append(
            ClusterScore(
                cluster_id, pred_raw, truth_raw, pred_clids, truth_clids, score
            )
        )
    mean = sum(c.score for c in scored) / len(scored)
    return ScoredAnnotation(
        clusters=tuple(scored),
        mean=mean,
        unmapped=tuple(unmapped),
        broad_type_notes=tuple(notes),
    )


def _shared_ancestry(
    pred_clids: frozenset[str], truth_clids: frozenset[str], dag: OntologyDag
) -> frozenset[str]:
    pred_up: set[str] = set()
    for clid in pred_clids:
        pred_up |= dag.ancestors(clid) | {clid}
    truth_up: set[str] = set()
    for clid in truth_clids:
        truth_up |= dag.ancestors(clid) | {clid}
    return frozenset(pred_up & truth_up)
