"""Exception hierarchy shared across the package.

Grouping matters for the CLI: SketchDataError maps to exit code 2
(bad inputs), BackendError to exit code 3 (provider trouble), and
anything else is a plain crash.
"""

from __future__ import annotations


class SketchBenchError(Exception):
    """Root of all package-specific errors."""


# ---------------------------------------------------------------- sketch data


class SketchDataError(SketchBenchError):
    """Invalid sketch/truth/config input data (CLI exit code 2)."""


class ParseError(SketchDataError):
    """File is not syntactically valid JSON."""


class SchemaError(SketchDataError):
    """A required field is missing or has the wrong type.

    `path` is a dotted/indexed locator like "clusters[2].top_genes".
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class InvariantError(SketchDataError):
    """Structurally valid sketch violating a semantic invariant."""


# -------------------------------------------------------------------- gateway


class BackendError(SketchBenchError):
    """LLM backend failure (CLI exit code 3)."""


class AuthError(BackendError):
    """Credential rejected; never retried."""


class RateLimitExhausted(BackendError):
    """Transient failures persisted through every retry attempt."""


class ReplayMismatch(BackendError):
    """Replay script disagrees with the request sequence."""


class EmptyResponse(BackendError):
    """Provider returned no text."""


class UnknownModel(SketchBenchError):
    """Model id absent from the rate card."""


# --------------------------------------------------------------- prompt forge


class MissingBinding(SketchBenchError):
    """A placeholder required by the stage template is unbound."""

    def __init__(self, name: str):
        super().__init__(f"unbound placeholder: {name}")
        self.name = name


class UnknownStage(SketchBenchError):
    """No template registered for the requested stage."""


class OutOfRange(SketchBenchError):
    """Iteration index outside the supported 1..3 window."""


# ------------------------------------------------------------ response parse


class ExtractionError(SketchBenchError):
    """Base for extractor failures.

    `position` is the character offset in the input text that the
    extractor was looking at when it gave up (best effort; 0 when
    nothing relevant was found at all).
    """

    def __init__(self, message: str, position: int = 0):
        super().__init__(f"{message} (at char {position})")
        self.position = position


class NoMappingFound(ExtractionError):
    pass


class KeyCoercionError(ExtractionError):
    def __init__(self, token: str, position: int = 0):
        super().__init__(f"key is not an integer: {token!r}", position)
        self.token = token


class MarkerListMissing(ExtractionError):
    pass


class EmptyMarkerList(ExtractionError):
    pass


class TreeMissing(ExtractionError):
    """No brace-delimited tree candidate in the text at all."""


class UnbalancedBraces(ExtractionError):
    pass


class MultipleRoots(ExtractionError):
    pass


class CycleDetected(ExtractionError):
    """A label repeats along/across branches; the nesting cannot be a tree."""


class NonStringKey(ExtractionError):
    pass


class PossibilityMissing(ExtractionError):
    pass


class NotANumber(ExtractionError):
    pass


class NoJsonFound(ExtractionError):
    pass


class MissingSection(ExtractionError):
    def __init__(self, section: str, position: int = 0):
        super().__init__(f"evaluation JSON lacks section {section!r}", position)
        self.section = section


# ------------------------------------------------------------------- bio ops


class UnknownCluster(SketchBenchError):
    pass


class ReportGrammarError(SketchDataError):
    """Lineage report does not follow the documented grammar."""


# -------------------------------------------------------------------- engine


class ClosureViolation(SketchBenchError):
    """Tree nodes and annotation labels failed to match after the retry."""


# ------------------------------------------------------------------- graders


class EmptyTruth(SketchDataError):
    pass


class BothEmpty(SketchBenchError):
    """Jaccard of two empty node sets (0/0) is undefined."""


class EmptyGraph(SketchBenchError):
    pass


class SingleClass(SketchBenchError):
    """AUROC needs at least one positive and one negative label."""


# -------------------------------------------------------------------- harness


class IncompatibleAblation(SketchDataError):
    """Requested ablation does not apply to the entry's task kind."""


class UnknownDataset(SketchDataError):
    pass
