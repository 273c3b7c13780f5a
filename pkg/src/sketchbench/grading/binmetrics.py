"""Binary-classification metrics for TF-gene regulation scoring."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..errors import SingleClass


def _check_pairs(scores: Sequence[float], labels: Sequence[int]) -> None:
    if len(scores) != len(labels):
        raise ValueError(f"{len(scores)} scores vs {len(labels)} labels")
    for label in labels:
        if label not in (0, 1):
            raise ValueError(f"labels must be binary, got {label!r}")


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Rank statistic (wins + half-ties over positive-negative pairs).

    Equal to the trapezoidal area under the ROC curve. Counting is
    integer-exact, and the half above 0.5 is rendered as 1 minus the
    mirrored half so flipping every label yields exactly 1 - auroc
    even in float arithmetic.
    """
    _check_pairs(scores, labels)
    positives = [s for s, y in zip(scores, labels) if y == 1]
    negatives = [s for s, y in zip(scores, labels) if y == 0]
    if not positives or not negatives:
        raise SingleClass("auroc needs both classes present")
    wins = 0
    ties = 0
    for sp in positives:
        for sn in negatives:
            if sp > sn:
                wins += 1
            elif sp == sn:
                ties += 1
    numerator = 2 * wins + ties  # halves kept integral
    denominator = 2 * len(positives) * len(negatives)
    if 2 * numerator <= denominator:
        return numerator / denominator
    return 1.0 - (denominator - numerator) / denominator


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    def as_rows(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return ((self.tn, self.fp), (self.fn, self.tp))

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp


def confusion(
    scores: Sequence[float], labels: Sequence[int], tau: float = 0.5
) -> ConfusionMatrix:
    """Threshold at tau; ties predict positive (score >= tau rule)."""
    _check_pairs(scores, labels)
    tn = fp = fn = tp = 0
    for score, label in zip(scores, labels):
        predicted = score >= tau
        if label == 1:
            tp += predicted
            fn += not predicted
        else:
            fp += predicted
            tn += not predicted
    return ConfusionMatrix(tn=tn, fp=fp, fn=fn, tp=tp)


def ece(scores: Sequence[float], labels: Sequence[int], bins: int = 10) -> float:
    """Expected calibration error over equal-width bins on [0, 1].

    Per-bin gap is |mean score - empirical accuracy|, weighted by bin
    population fraction. Scores of exactly 1.0 fall in the last bin.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    _check_pairs(scores, labels)
    if not scores:
        return 0.0
    score_sums = [0.0] * bins
    label_sums = [0.0] * bins
    counts = [0] * bins
    for score, label in zip(scores, labels):
        slot = min(int(score * bins), bins - 1)
        slot = max(slot, 0)
        score_sums[slot] += score
        label_sums[slot] += label
        counts[slot] += 1
    total = len(scores)
    error = 0.0
    for slot in range(bins):
        if counts[slot] == 0:
            continue
        gap = abs(score_sums[slot] / counts[slot] - label_sums[slot] / counts[slot])
        error += counts[slot] / total * gap
    return error


def brier(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mean squared difference between score and binary label."""
    _check_pairs(scores, labels)
    if not scores:
        return 0.0
    return sum((s - y) ** 2 for s, y in zip(scores, labels)) / len(scores)
