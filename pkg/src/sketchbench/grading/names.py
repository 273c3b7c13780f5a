"""Cell-type name normalization ahead of ontology lookup.

Cleaning is rule-based (case, punctuation, plural "cells"); irregular
plurals and lab-specific spellings are handled by a committed synonym
table applied after the rules.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Mapping, Optional, Union

# Slash is biologically meaningful (mixed populations like "T/NK"), so
# it survives punctuation stripping.
_PUNCT_RE = re.compile(r"[^a-z0-9/ ]+")
_SPACE_RE = re.compile(r"\s+")


def clean_cell_name(raw: str, synonyms: Optional[Mapping[str, str]] = None) -> str:
    """Normalize a free-text cell-type label.

    Lowercase, strip punctuation except "/", collapse whitespace, turn a
    trailing "cells" token into "cell", then apply the synonym table.
    Unmapped names pass through cleaned.
    """
    name = _PUNCT_RE.sub(" ", raw.lower())
    name = _SPACE_RE.sub(" ", name).strip()
    if name.endswith("cells"):
        head, _, _ = name.rpartition("cells")
        if head == "" or head.endswith((" ", "/")):
            name = head + "cell"
    if synonyms:
        name = synonyms.get(name, name)
    return name


def load_synonyms(path: Union[str, Path]) -> dict[str, str]:
    """Read a raw TAB canonical synonym table; '#' lines skipped.

    Keys are stored cleaned (rules only) so lookup happens after rule
    application.
    """
    table: dict[str, str] = {}
    for lineno, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 2 tab-separated fields")
        key = clean_cell_name(parts[0])
        value = parts[1].strip()
        if not key or not value:
            raise ValueError(f"{path}:{lineno}: empty field")
        table[key] = value
    return table
