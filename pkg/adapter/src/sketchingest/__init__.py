"""sketchingest converts public single-cell artifacts into sketch JSON.

Three operations, one per sketch kind: annotation and trajectory
sketches come from H5AD expression files, GRN question sketches from
regulator-edge exports. Every emitted file is gated through the
benchmark's own sketch loader before it is considered written.
"""

from .annotation import make_annotation_sketch
from .config import PINNED_RESOLUTIONS, ClusteringConfig, pinned_resolution
from .errors import (
    InputFormatError,
    InsufficientNegativePool,
    MissingTimepointColumn,
    SketchIngestError,
    UnsupportedMarkerCount,
)
from .grn import make_grn_sketch
from .io import ExpressionMatrix, read_h5ad, write_sketch
from .trajectory import make_trajectory_sketch

__all__ = [
    "ClusteringConfig",
    "ExpressionMatrix",
    "InputFormatError",
    "InsufficientNegativePool",
    "MissingTimepointColumn",
    "PINNED_RESOLUTIONS",
    "SketchIngestError",
    "UnsupportedMarkerCount",
    "make_annotation_sketch",
    "make_grn_sketch",
    "make_trajectory_sketch",
    "pinned_resolution",
    "read_h5ad",
    "write_sketch",
]
