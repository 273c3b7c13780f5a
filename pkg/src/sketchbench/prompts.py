"""Stage prompt rendering from committed template assets.

One template file per pipeline stage lives in templates/. Placeholder
syntax is single-brace {name}; literal braces are doubled ({{ and }});
a block wrapped in {?name}...{/?} is emitted only when the guarding
binding is present and nonempty (used by the hypothesis stage, whose
source builds the prompt by conditional concatenation).

The template wording is wire protocol addressed to the model — strings
like "Python list" or "python code dictionary" inside them are part of
the protocol, not implementation guidance — so the files must not be
reflowed or copyedited.
"""

from __future__ import annotations

import re
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Mapping

from .errors import MissingBinding, OutOfRange, UnknownStage


class PromptStage(Enum):
    ANNOT_DIRECT = "annot_direct"
    ANNOT_HYPOTHESIS = "annot_hypothesis"
    ANNOT_MARKER_PROPOSAL = "annot_marker_proposal"
    ANNOT_DOTPLOT_EVAL = "annot_dotplot_eval"
    TRAJ_ANNOTATE = "traj_annotate"
    TRAJ_DIRECT_TREE = "traj_direct_tree"
    TRAJ_ROOT = "traj_root"
    TRAJ_TREE = "traj_tree"
    TRAJ_FINALIZE = "traj_finalize"
    TRAJ_MONOCLE_ANALYSIS = "traj_monocle_analysis"
    TRAJ_RECONSIDER = "traj_reconsider"
    TRAJ_SYNTHESIS = "traj_synthesis"
    GRN_DIRECT = "grn_direct"
    GRN_PILOT = "grn_pilot"


SYSTEM_ROLES: dict[PromptStage, str] = {
    PromptStage.ANNOT_DIRECT: "You are expert in scRNA sequencing cell type annotation.",
    PromptStage.ANNOT_HYPOTHESIS: (
        "You are a research assistant specializing in cell biology. Based on top "
        "differentially expressed genes, previous cell type annotation (if provided), "
        "Clusters without need to be focused on (if provided), summary of previous "
        "iteration annotation (if provided), and failed genes (if provided), refine "
        "the given hypothesis to be more accurate and specific."
    ),
    PromptStage.ANNOT_MARKER_PROPOSAL: (
        "You are an AI trained to design scientific experiments based on hypotheses "
        "and background information."
    ),
    PromptStage.ANNOT_DOTPLOT_EVAL: (
        "You are an expert bioinformatician specializing in single-cell RNA "
        "sequencing data analysis and cell type annotation."
    ),
    # trajectory and GRN stages run without a system role
    PromptStage.TRAJ_ANNOTATE: "",
    PromptStage.TRAJ_DIRECT_TREE: "",
    PromptStage.TRAJ_ROOT: "",
    PromptStage.TRAJ_TREE: "",
    PromptStage.TRAJ_FINALIZE: "",
    PromptStage.TRAJ_MONOCLE_ANALYSIS: "",
    PromptStage.TRAJ_RECONSIDER: "",
    PromptStage.TRAJ_SYNTHESIS: "",
    PromptStage.GRN_DIRECT: "",
    PromptStage.GRN_PILOT: "",
}

# defaults when the dataset configuration omits the add-on slots
NO_RULE_PROVIDED = "None provided"

_TOKEN_RE = re.compile(
    r"\{\{|\}\}|\{\?(?P<open>[a-z_][a-z0-9_]*)\}|\{/\?\}|\{(?P<name>[a-z_][a-z0-9_]*)\}",
    re.IGNORECASE,
)


@lru_cache(maxsize=None)
def _template_text(stage: PromptStage) -> str:
    name = f"{stage.value}.txt"
    try:
        raw = (
            resources.files("sketchbench")
            .joinpath("templates", name)
            .read_text(encoding="utf-8")
        )
    except FileNotFoundError:
        raise UnknownStage(f"no template asset for stage {stage.value!r}")
    # files end with one POSIX newline that is not part of the prompt
    return raw.removesuffix("\n")


def _tokens(template: str):
    """Yield ('lit', text) / ('sub', name) / ('open', name) / ('close', None)."""
    pos = 0
    for match in _TOKEN_RE.finditer(template):
        if match.start() > pos:
            yield "lit", template[pos : match.start()]
        token = match.group()
        if token == "{{":
            yield "lit", "{"
        elif token == "}}":
            yield "lit", "}"
        elif match.group("open"):
            yield "open", match.group("open")
        elif token == "{/?}":
            yield "close", None
        else:
            yield "sub", match.group("name")
        pos = match.end()
    if pos < len(template):
        yield "lit", template[pos:]


def render(stage: PromptStage, bindings: Mapping[str, object]) -> tuple[str, str]:
    """Render a stage prompt; returns (system_role, content).

    Raises MissingBinding for any required placeholder that is absent
    (conditional blocks tolerate absence: they are simply skipped).
    """
    if not isinstance(stage, PromptStage):
        raise UnknownStage(f"not a prompt stage: {stage!r}")
    template = _template_text(stage)
    out: list[str] = []
    # stack of conditional-activity flags; emit only when all are True
    active: list[bool] = []

    def binding_text(name: str) -> str:
        value = bindings[name]
        return value if isinstance(value, str) else str(value)

    for kind, payload in _tokens(template):
        emitting = all(active)
        if kind == "lit":
            if emitting:
                out.append(payload)
        elif kind == "open":
            present = payload in bindings and binding_text(payload) != ""
            active.append(present)
        elif kind == "close":
            if not active:
                raise UnknownStage(
                    f"template {stage.value}: conditional close without open"
                )
            active.pop()
        else:  # sub
            if not emitting:
                continue
            if payload not in bindings:
                raise MissingBinding(payload)
            out.append(binding_text(payload))
    if active:
        raise UnknownStage(f"template {stage.value}: unclosed conditional block")
    content = "".join(out)
    return SYSTEM_ROLES[stage], content


def required_bindings(stage: PromptStage) -> set[str]:
    """Placeholders that must be bound for the stage (conditional guards
    and the placeholders inside their blocks excluded)."""
    template = _template_text(stage)
    required: set[str] = set()
    depth = 0
    for kind, payload in _tokens(template):
        if kind == "open":
            depth += 1
        elif kind == "close":
            depth -= 1
        elif kind == "sub" and depth == 0:
            required.add(payload)
    return required


def optional_bindings(stage: PromptStage) -> set[str]:
    """Conditional-guard names in the stage template."""
    template = _template_text(stage)
    return {payload for kind, payload in _tokens(template) if kind == "open"}


def stabilization_fraction(iteration: int) -> Fraction:
    """Share of clusters frozen after an iteration: 1/3 on the first,
    2/3 from the second on."""
    if isinstance(iteration, bool) or not isinstance(iteration, int):
        raise OutOfRange(f"iteration must be an integer, got {iteration!r}")
    if not 1 <= iteration <= 3:
        raise OutOfRange(f"iteration must be 1..3, got {iteration}")
    return Fraction(1, 3) if iteration == 1 else Fraction(2, 3)
