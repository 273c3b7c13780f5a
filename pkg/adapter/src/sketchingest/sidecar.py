"""Context sidecar handling.

The biological description of a dataset travels next to the h5ad file
as a small plain-text sidecar rather than inside it, because authors
rarely embed usable prose in the matrix file. A missing sidecar is not
fatal: the sketch falls back to the same sentinel the benchmark's
metadata-redaction ablation uses, with a warning.
"""

from __future__ import annotations

import warnings
from pathlib import Path
from typing import Optional, Union

from sketchbench.sketches import REDACTED_CONTEXT

SIDECAR_SUFFIX = ".context.txt"


def load_context(
    h5ad_path: Union[str, Path], sidecar: Optional[Union[str, Path]] = None
) -> str:
    path = (
        Path(sidecar)
        if sidecar is not None
        else Path(h5ad_path).with_suffix(SIDECAR_SUFFIX)
    )
    if not path.exists():
        warnings.warn(
            f"no context sidecar at {path}; emitting {REDACTED_CONTEXT!r}",
            stacklevel=2,
        )
        return REDACTED_CONTEXT
    text = path.read_text(encoding="utf-8").strip()
    if not text:
        warnings.warn(
            f"context sidecar {path} is empty; emitting {REDACTED_CONTEXT!r}",
            stacklevel=2,
        )
        return REDACTED_CONTEXT
    return text
