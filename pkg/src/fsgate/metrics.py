"""Subject-level aggregation and binary classification scores.

Record probabilities are averaged per subject; the subject is called PWP
(positive, label 1) when the mean probability is at least 0.5. Every rate
with a zero denominator is reported as 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np

PROB_CLIP = 1e-15
METRIC_NAMES = ("accuracy", "specificity", "sensitivity", "precision", "f1", "mcc", "cross_entropy")


@dataclass(frozen=True)
class SubjectPrediction:
    subject_id: str
    mean_prob: float
    predicted: int
    actual: int


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    specificity: float
    sensitivity: float
    precision: float
    f1: float
    mcc: float
    cross_entropy: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricSummary:
    mean: MetricSet
    std: MetricSet
    n_folds: int


def aggregate_subjects(record_probs, record_subjects, record_labels) -> list[SubjectPrediction]:
    """One prediction per subject, in order of first appearance."""
    probs = np.asarray(record_probs, dtype=np.float64)
    if not (len(probs) == len(record_subjects) == len(record_labels)):
        raise ValueError("record vectors are misaligned")
    sums: dict = {}
    counts: dict = {}
    labels: dict = {}
    for p, s, lab in zip(probs, record_subjects, record_labels):
        lab = int(lab)
        if labels.setdefault(s, lab) != lab:
            raise ValueError(f"subject {s!r} has inconsistent labels")
        sums[s] = sums.get(s, 0.0) + p
        counts[s] = counts.get(s, 0) + 1
    out = []
    for s in labels:
        m = sums[s] / counts[s]
        out.append(SubjectPrediction(str(s), m, int(m >= 0.5), labels[s]))
    return out


def confusion(preds: Sequence[SubjectPrediction]) -> ConfusionCounts:
    tp = tn = fp = fn = 0
    for p in preds:
        if p.predicted == 1:
            if p.actual == 1:
                tp += 1
            else:
                fp += 1
        elif p.actual == 0:
            tn += 1
        else:
            fn += 1
    return ConfusionCounts(tp, tn, fp, fn)


def _ratio(num, den):
    return num / den if den else 0.0


def basic_rates(c: ConfusionCounts) -> tuple[float, float, float, float, float]:
    """(accuracy, specificity, sensitivity, precision, f1)."""
    accuracy = _ratio(c.tp + c.tn, c.total)
    specificity = _ratio(c.tn, c.tn + c.fp)
    sensitivity = _ratio(c.tp, c.tp + c.fn)
    precision = _ratio(c.tp, c.tp + c.fp)
    f1 = _ratio(2 * precision * sensitivity, precision + sensitivity)
    return accuracy, specificity, sensitivity, precision, f1


def mcc(c: ConfusionCounts) -> float:
    factors = ((c.tp + c.fp), (c.tp + c.fn), (c.tn + c.fp), (c.tn + c.fn))
    if 0 in factors:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(math.prod(factors))


def cross_entropy(preds: Sequence[SubjectPrediction]) -> float:
    """Mean binary cross-entropy of subject mean probabilities."""
    if not preds:
        raise ValueError("no predictions")
    total = 0.0
    for p in preds:
        q = min(max(p.mean_prob, PROB_CLIP), 1.0 - PROB_CLIP)
        total -= math.log(q) if p.actual == 1 else math.log1p(-q)
    return total / len(preds)


def metric_set(preds: Sequence[SubjectPrediction]) -> MetricSet:
    c = confusion(preds)
    return MetricSet(*basic_rates(c), mcc(c), cross_entropy(preds))


def summarize_folds(per_fold: Sequence[MetricSet]) -> MetricSummary:
    """Fold mean and population (denominator k) standard deviation."""
    if not per_fold:
        raise ValueError("no folds to summarize")
    means, stds = {}, {}
    for f in fields(MetricSet):
        vals = np.array([getattr(m, f.name) for m in per_fold])
        means[f.name] = float(vals.mean())
        stds[f.name] = float(vals.std())
    return MetricSummary(MetricSet(**means), MetricSet(**stds), len(per_fold))
