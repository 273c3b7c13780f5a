"""Tolerant extraction of structured answers from free-form LLM text.

Every extractor is total over arbitrary input: it either returns a
value or raises a typed ExtractionError carrying the character
position it gave up at. The scanning rule everywhere is "last
well-formed object wins", because models often restate drafts before
the final answer.

The tolerant value grammar accepts single or double quotes, trailing
commas, unquoted integer keys, and bare words, on top of plain JSON.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from .prompts import stabilization_fraction
from .errors import (
    CycleDetected,
    EmptyMarkerList,
    KeyCoercionError,
    MarkerListMissing,
    MissingSection,
    MultipleRoots,
    NoJsonFound,
    NoMappingFound,
    NonStringKey,
    NotANumber,
    PossibilityMissing,
    TreeMissing,
    UnbalancedBraces,
)

ROOT = "root"

# cap on candidate regions tried per extraction, so pathological fuzz
# inputs stay linear-ish
_MAX_CANDIDATES = 512

_FENCE_RE = re.compile(r"```[a-zA-Z0-9_+-]*\n?|```")

_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")

_POSSIBILITY_RE = re.compile(r"possibility\s+is\b\s*:?", re.IGNORECASE)

_MARKER_TOKEN_RE = re.compile(r"MARKER_GENES")

_INT_RE = re.compile(r"-?\d+")


def strip_code_fences(text: str) -> str:
    """Remove markdown fence markers, keeping the fenced content."""
    return _FENCE_RE.sub("", text)


# ------------------------------------------------------- tolerant value parse


class _ParseFail(Exception):
    """Internal: candidate text is not a value under the tolerant grammar."""


_WORD_LITERALS = {
    "true": True,
    "false": False,
    "null": None,
    "none": None,
    "nan": math.nan,
}


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r\n":
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def value(self):
        self.skip_ws()
        ch = self.peek()
        if ch == "{":
            return self.object()
        if ch == "[":
            return self.array()
        if ch in "\"'":
            return self.string(ch)
        if not ch:
            raise _ParseFail
        return self.bareword()

    def object(self) -> dict:
        self.pos += 1  # consume {
        out: dict = {}
        self.skip_ws()
        if self.peek() == "}":
            self.pos += 1
            return out
        while True:
            self.skip_ws()
            if self.peek() == "}":  # trailing comma case
                self.pos += 1
                return out
            key = self.value()
            if isinstance(key, (dict, list)):
                raise _ParseFail
            self.skip_ws()
            if self.peek() != ":":
                raise _ParseFail
            self.pos += 1
            out[key] = self.value()
            self.skip_ws()
            ch = self.peek()
            if ch == ",":
                self.pos += 1
                continue
            if ch == "}":
                self.pos += 1
                return out
            raise _ParseFail

    def array(self) -> list:
        self.pos += 1
        out: list = []
        self.skip_ws()
        if self.peek() == "]":
            self.pos += 1
            return out
        while True:
            self.skip_ws()
            if self.peek() == "]":
                self.pos += 1
                return out
            out.append(self.value())
            self.skip_ws()
            ch = self.peek()
            if ch == ",":
                self.pos += 1
                continue
            if ch == "]":
                self.pos += 1
                return out
            raise _ParseFail

    def string(self, quote: str) -> str:
        self.pos += 1
        chunks: list[str] = []
        while True:
            if self.pos >= len(self.text):
                raise _ParseFail
            ch = self.text[self.pos]
            if ch == "\\":
                self.pos += 1
                if self.pos >= len(self.text):
                    raise _ParseFail
                esc = self.text[self.pos]
                mapped = {"n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f"}.get(esc)
                if mapped is not None:
                    chunks.append(mapped)
                elif esc == "u":
                    hexpart = self.text[self.pos + 1 : self.pos + 5]
                    if len(hexpart) == 4 and all(c in "0123456789abcdefABCDEF" for c in hexpart):
                        chunks.append(chr(int(hexpart, 16)))
                        self.pos += 4
                    else:
                        chunks.append(esc)
                else:
                    chunks.append(esc)
                self.pos += 1
                continue
            if ch == quote:
                self.pos += 1
                return "".join(chunks)
            chunks.append(ch)
            self.pos += 1

    def bareword(self):
        """Unquoted token: number, word literal, or plain string."""
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in ":,}]{[\"'\n":
            self.pos += 1
        token = self.text[start : self.pos].strip()
        if not token:
            raise _ParseFail
        try:
            return int(token)
        except ValueError:
            pass
        try:
            return float(token)
        except ValueError:
            pass
        lowered = token.lower()
        if lowered in _WORD_LITERALS:
            return _WORD_LITERALS[lowered]
        return token


def _parse_candidate(text: str) -> Any:
    scanner = _Scanner(text)
    value = scanner.value()
    scanner.skip_ws()
    if scanner.pos != len(scanner.text):
        raise _ParseFail
    return value


@dataclass
class _Candidates:
    """Balanced brace regions of a text, last-closing first."""

    regions: list[tuple[int, int]]  # (start, end) inclusive of braces
    unclosed: Optional[int]  # position of an unmatched '{', if any

    @classmethod
    def scan(cls, text: str) -> "_Candidates":
        stack: list[int] = []
        regions: list[tuple[int, int]] = []
        for i, ch in enumerate(text):
            if ch == "{":
                stack.append(i)
            elif ch == "}" and stack:
                regions.append((stack.pop(), i))
        # later-ending first; among equal ends the outermost (earlier
        # start) first
        regions.sort(key=lambda r: (-r[1], r[0]))
        return cls(regions[:_MAX_CANDIDATES], stack[0] if stack else None)


def _iter_parsed(text: str):
    """Yield (parsed value, start position) for each parseable region."""
    for start, end in _Candidates.scan(text).regions:
        try:
            yield _parse_candidate(text[start : end + 1]), start
        except (_ParseFail, RecursionError):
            continue


# --------------------------------------------------------------- cluster map


def _is_scalar(value: Any) -> bool:
    return isinstance(value, (str, int, float, bool)) or value is None


def extract_cluster_map(text: str) -> dict[int, str]:
    """Last well-formed flat mapping cluster id -> cell-type string."""
    cleaned = strip_code_fences(text)
    for parsed, start in _iter_parsed(cleaned):
        if not isinstance(parsed, dict) or not parsed:
            continue
        if not all(_is_scalar(v) for v in parsed.values()):
            continue
        out: dict[int, str] = {}
        for key, value in parsed.items():
            try:
                cid = int(str(key).strip())
            except ValueError:
                raise KeyCoercionError(str(key), start)
            out[cid] = str(value).strip()
        return out
    raise NoMappingFound("no brace-delimited mapping in text", len(cleaned))


# -------------------------------------------------------------- marker genes


def extract_marker_genes(text: str) -> list[str]:
    """Gene list following the last MARKER_GENES token, order-preserving
    dedupe (uppercase comparison, original spelling kept)."""
    cleaned = strip_code_fences(text)
    matches = list(_MARKER_TOKEN_RE.finditer(cleaned))
    if not matches:
        raise MarkerListMissing("no MARKER_GENES token", len(cleaned))
    for m in reversed(matches):
        after = cleaned[m.end() :]
        bracket = after.find("[")
        if bracket < 0:
            continue
        closing = after.find("]", bracket)
        if closing < 0:
            continue
        try:
            items = _parse_candidate(after[bracket : closing + 1])
        except _ParseFail:
            continue
        if not isinstance(items, list):
            continue
        genes: list[str] = []
        seen: set[str] = set()
        for item in items:
            symbol = str(item).strip()
            if not symbol:
                continue
            upper = symbol.upper()
            if upper in seen:
                continue
            seen.add(upper)
            genes.append(symbol)
        if not genes:
            raise EmptyMarkerList("marker list parsed empty", m.start())
        return genes
    raise MarkerListMissing("no bracketed list after MARKER_GENES", matches[-1].end())


# --------------------------------------------------------------------- trees


@dataclass(frozen=True)
class TrajectoryTree:
    """Rooted tree over cell-type labels with a synthetic "root" node."""

    nodes: frozenset[str]
    parent: Mapping[str, str]  # child label -> parent label, root excluded

    def __post_init__(self):
        object.__setattr__(self, "parent", dict(self.parent))

    @property
    def root(self) -> str:
        return ROOT

    def children(self, label: str) -> list[str]:
        return sorted(c for c, p in self.parent.items() if p == label)

    def non_root_nodes(self) -> frozenset[str]:
        return self.nodes - {ROOT}

    def edges(self) -> set[tuple[str, str]]:
        return {(p, c) for c, p in self.parent.items()}

    def to_nested(self) -> dict:
        def build(label: str) -> dict:
            return {c: build(c) for c in self.children(label)}

        return {ROOT: build(ROOT)}


def tree_from_nested(nested: Mapping, position: int = 0) -> TrajectoryTree:
    """Convert a nested-dict tree (possibly missing the dummy root) to a
    TrajectoryTree. Raises the same typed errors as extract_tree."""
    if not isinstance(nested, Mapping):
        raise TreeMissing("tree payload is not a mapping", position)
    top_keys = list(nested.keys())
    for key in top_keys:
        if not isinstance(key, str):
            raise NonStringKey(f"node label {key!r} is not a string", position)
    if len(top_keys) == 0:
        body: Mapping = {}
    elif len(top_keys) == 1 and top_keys[0] == ROOT:
        body = nested[ROOT]
        if not isinstance(body, Mapping):
            raise TreeMissing("root value is not a mapping", position)
    elif len(top_keys) == 1:
        body = nested  # single real top node: hang it under a synthetic root
    else:
        if ROOT in top_keys:
            raise MultipleRoots(
                f"root plus {len(top_keys) - 1} sibling top-level nodes", position
            )
        raise MultipleRoots(f"{len(top_keys)} top-level nodes", position)

    nodes = {ROOT}
    parent: dict[str, str] = {}

    def walk(children: Mapping, parent_label: str):
        for label, sub in children.items():
            if isinstance(label, (int, float, bool)) or not isinstance(label, str):
                raise NonStringKey(f"node label {label!r} is not a string", position)
            if label in nodes:
                raise CycleDetected(f"label {label!r} appears twice", position)
            if not isinstance(sub, Mapping):
                raise NonStringKey(
                    f"children of {label!r} must be a nested mapping", position
                )
            nodes.add(label)
            parent[label] = parent_label
            walk(sub, label)

    walk(body, ROOT)
    return TrajectoryTree(frozenset(nodes), parent)


def extract_tree(text: str) -> TrajectoryTree:
    """Last well-formed nested-dict tree in the text."""
    cleaned = strip_code_fences(text)
    candidates = _Candidates.scan(cleaned)
    last_error: Optional[Exception] = None
    for start, end in candidates.regions:
        try:
            parsed = _parse_candidate(cleaned[start : end + 1])
        except (_ParseFail, RecursionError):
            continue
        if not isinstance(parsed, dict):
            continue
        try:
            return tree_from_nested(parsed, start)
        except (MultipleRoots, CycleDetected, NonStringKey, TreeMissing) as exc:
            last_error = exc
            continue
    if last_error is not None:
        raise last_error
    if candidates.unclosed is not None:
        raise UnbalancedBraces("brace opened but never closed", candidates.unclosed)
    raise TreeMissing("no nested-dict tree in text", len(cleaned))


def serialize_tree(tree: TrajectoryTree) -> str:
    """Nested-dict text form; extract_tree(serialize_tree(t)) == t."""

    def render(label: str) -> str:
        inner = ", ".join(f"'{c}': {render(c)}" for c in tree.children(label))
        return "{" + inner + "}"

    return "{'" + ROOT + "': " + render(ROOT) + "}"


# --------------------------------------------------------------- possibility


def extract_possibility(text: str) -> float:
    """Number after the last "Possibility is" anchor, clamped to [0,1]."""
    matches = list(_POSSIBILITY_RE.finditer(text))
    if not matches:
        raise PossibilityMissing("no 'Possibility is' anchor", len(text))
    anchor = matches[-1]
    found = _NUMBER_RE.search(text, anchor.end())
    if not found:
        raise NotANumber("no number after the anchor", anchor.end())
    try:
        value = float(found.group())
    except (ValueError, OverflowError):
        raise NotANumber(f"unparseable number {found.group()!r}", found.start())
    if math.isnan(value):
        raise NotANumber("possibility is NaN", found.start())
    return min(1.0, max(0.0, value))


# --------------------------------------------------------------- eval report


@dataclass
class EvalReport:
    """Parsed dotplot-evaluation answers.

    stabilized ids always refer to clusters present in annotations;
    derived=True means section 4b was absent and the stabilized set was
    computed from confidences.
    """

    answers: dict[str, Any]
    annotations: dict[int, str]
    confidences: dict[int, float]
    stabilized: set[int]
    derived: bool = field(default=False)


def _coerce_int_keys(raw: Mapping) -> dict[int, Any]:
    out: dict[int, Any] = {}
    for key, value in raw.items():
        try:
            out[int(str(key).strip())] = value
        except ValueError:
            continue  # tolerate stray non-cluster keys
    return out


def _collect_ids(value: Any) -> set[int]:
    """Pull cluster ids out of whatever shape section 4b came in."""
    if isinstance(value, bool):
        return set()
    if isinstance(value, int):
        return {value}
    if isinstance(value, float) and value.is_integer():
        return {int(value)}
    if isinstance(value, str):
        return {int(tok) for tok in _INT_RE.findall(value)}
    if isinstance(value, (list, tuple, set)):
        out: set[int] = set()
        for item in value:
            out |= _collect_ids(item)
        return out
    if isinstance(value, Mapping):
        out = set()
        for key in value:
            out |= _collect_ids(key)
        return out
    return set()


def extract_eval_report(text: str, iteration: int) -> EvalReport:
    """Parse the structured evaluation JSON for one iteration.

    Annotations come from section "3b", confidences from "4a",
    stabilized ids from "4b"; a missing 4b derives the stabilized set
    as the top stabilization_fraction(iteration) share of clusters by
    confidence, ties broken toward the lower cluster id.
    """
    fraction = stabilization_fraction(iteration)
    cleaned = strip_code_fences(text)
    report: Optional[dict] = None
    for parsed, _start in _iter_parsed(cleaned):
        if isinstance(parsed, dict) and any(
            isinstance(k, str) and k.strip().lower() in ("3b", "4a", "4b")
            for k in parsed
        ):
            report = parsed
            break
    if report is None:
        raise NoJsonFound("no evaluation JSON object in text", len(cleaned))

    answers = {str(k).strip(): v for k, v in report.items()}
    if "3b" not in answers:
        raise MissingSection("3b")
    raw_annotations = answers["3b"]
    if not isinstance(raw_annotations, Mapping):
        raise MissingSection("3b")
    annotations = {
        cid: str(label).strip()
        for cid, label in _coerce_int_keys(raw_annotations).items()
    }

    confidences: dict[int, float] = {}
    if isinstance(answers.get("4a"), Mapping):
        for cid, value in _coerce_int_keys(answers["4a"]).items():
            try:
                conf = float(str(value).strip())
            except (ValueError, TypeError):
                continue
            if math.isnan(conf):
                continue
            confidences[cid] = min(1.0, max(0.0, conf))

    if "4b" in answers:
        stabilized = _collect_ids(answers["4b"]) & set(annotations)
        derived = False
    else:
        count = math.ceil(fraction * len(annotations))
        ranked = sorted(
            annotations, key=lambda cid: (-confidences.get(cid, 0.0), cid)
        )
        stabilized = set(ranked[:count])
        derived = True

    return EvalReport(
        answers=answers,
        annotations=annotations,
        confidences=confidences,
        stabilized=stabilized,
        derived=derived,
    )
