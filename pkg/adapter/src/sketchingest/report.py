"""Render and check the lineage diagnostic report text.

The trajectory sketch carries its lineage evidence as plain text: a
header with cluster and edge counts, an edges section listing
parent -> child lineage edges, and a single pseudotime_order line
sorting every cluster name from earliest to latest. parse() applies
the same rules the renderer guarantees, so tests can round-trip
generated reports.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import InputFormatError

_HEADER_RE = re.compile(r"^clusters: (\d+); edges: (\d+)$")


@dataclass(frozen=True)
class LineageReport:
    edges: tuple[tuple[str, str], ...]
    order: tuple[str, ...]


def render(report: LineageReport) -> str:
    lines = [
        f"clusters: {len(report.order)}; edges: {len(report.edges)}",
        "edges:",
    ]
    lines.extend(f"  {src} -> {dst}" for src, dst in report.edges)
    lines.append("pseudotime_order:")
    lines.append("  " + " < ".join(report.order))
    return "\n".join(lines)


def parse(text: str) -> LineageReport:
    lines = text.strip("\n").split("\n")
    if len(lines) < 4:
        raise InputFormatError("report needs header, edges:, pseudotime_order:")
    header = _HEADER_RE.match(lines[0])
    if not header:
        raise InputFormatError(f"bad header line: {lines[0]!r}")
    cluster_count, edge_count = int(header.group(1)), int(header.group(2))
    if lines[1] != "edges:":
        raise InputFormatError(f"expected 'edges:' on line 2, got {lines[1]!r}")

    edges: list[tuple[str, str]] = []
    i = 2
    while i < len(lines) and lines[i] != "pseudotime_order:":
        line = lines[i]
        if not line.startswith("  ") or " -> " not in line:
            raise InputFormatError(f"bad edge line: {line!r}")
        src, _, dst = line[2:].partition(" -> ")
        if not src or not dst or " -> " in dst:
            raise InputFormatError(f"bad edge line: {line!r}")
        edges.append((src, dst))
        i += 1
    if i >= len(lines) - 1 or lines[i] != "pseudotime_order:":
        raise InputFormatError("missing pseudotime_order: section")
    order_line = lines[i + 1]
    if i + 2 != len(lines) or not order_line.startswith("  "):
        raise InputFormatError("pseudotime_order must be one indented line, last")
    order = tuple(order_line[2:].split(" < "))

    if len(edges) != edge_count:
        raise InputFormatError(f"header says {edge_count} edges, found {len(edges)}")
    if len(set(order)) != len(order):
        raise InputFormatError("pseudotime order repeats a cluster name")
    if len(order) != cluster_count:
        raise InputFormatError(
            f"header says {cluster_count} clusters, order lists {len(order)}"
        )
    vocabulary = set(order)
    for src, dst in edges:
        if src not in vocabulary or dst not in vocabulary:
            raise InputFormatError(f"edge endpoint not in order: {src} -> {dst}")
    return LineageReport(tuple(edges), order)
