"""Tunables for sketch construction.

Clustering resolution is pinned per dataset so regenerating a sketch
reproduces the documented cluster count instead of drifting with
library defaults. New datasets get an entry once their resolution is
settled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import InputFormatError


@dataclass(frozen=True)
class ClusteringConfig:
    """Preprocessing and graph-clustering knobs shared by both h5ad ops."""

    n_hvg: Optional[int] = 2000  # None keeps every gene
    n_pcs: int = 50
    n_neighbors: int = 15
    seed: int = 0

    def __post_init__(self):
        if self.n_hvg is not None and self.n_hvg < 1:
            raise InputFormatError("n_hvg must be positive or None")
        if self.n_pcs < 1 or self.n_neighbors < 1:
            raise InputFormatError("n_pcs and n_neighbors must be positive")


# dataset id -> community-detection resolution that reproduces the
# documented cluster count (pbmc3k: 8 clusters)
PINNED_RESOLUTIONS: dict[str, float] = {
    "pbmc3k": 0.5,
    "pancreas_e12_e15": 1.0,
}


def pinned_resolution(dataset_id: str) -> float:
    try:
        return PINNED_RESOLUTIONS[dataset_id]
    except KeyError:
        known = ", ".join(sorted(PINNED_RESOLUTIONS)) or "(none)"
        raise InputFormatError(
            f"no pinned resolution for dataset {dataset_id!r}; known: {known}"
        ) from None
