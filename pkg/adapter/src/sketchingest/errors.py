"""Exception types for the ingest pipeline.

Everything raised on purpose derives from SketchIngestError so batch
scripts can catch a single type. The CLI maps these to exit code 2.
"""


class SketchIngestError(Exception):
    """Base class for ingest failures."""


class InputFormatError(SketchIngestError):
    """An input file is unreadable or not in the expected layout."""


class MissingTimepointColumn(SketchIngestError):
    """The cell metadata lacks the column trajectory sketches need."""


class InsufficientNegativePool(SketchIngestError):
    """A TF has no eligible genes left to sample a negative pair from."""


class UnsupportedMarkerCount(SketchIngestError):
    """Requested marker list length is not one the sketch format allows."""
