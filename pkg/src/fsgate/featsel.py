"""Feature-selection techniques and the subset-size sweeps over them.

* ANOVA filter: rank features by the two-group F statistic.
* LASSO embedded: rank features by where they enter the L1 path.
* SFS wrapper: greedy forward selection scored by cross-validation.

Ranked methods are swept over the top-n prefixes; SFS records the score of
each greedily grown subset. Either way the best subset size is picked with
:func:`pick_best`. All ties go to the smaller n or the lower feature index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from fsgate import linmodel
from fsgate.metrics import MetricSet

# stands in for an infinite F (zero within-group variance, nonzero between)
F_SENTINEL = float(np.finfo(np.float64).max)


class Strategy(str, enum.Enum):
    MAX_ACCURACY = "max_accuracy"
    MIN_CROSS_ENTROPY = "min_cross_entropy"

    def key(self, accuracy: float, cross_entropy: float) -> float:
        """Smaller is better."""
        return -accuracy if self is Strategy.MAX_ACCURACY else cross_entropy


class Evaluator(Protocol):
    n_folds: int

    def evaluate(self, subsets) -> list[MetricSet]:
        """Per-fold metrics; ``subsets`` is one index set or one per fold."""


@dataclass(frozen=True)
class FeatureRanking:
    order: tuple
    scores: np.ndarray

    def top(self, n: int) -> tuple:
        return tuple(sorted(self.order[:n]))


@dataclass
class CurvePoint:
    n: int
    subset: tuple
    accuracy: float
    cross_entropy: float
    fold_metrics: list = field(default_factory=list, repr=False)


@dataclass
class SelectionCurve:
    method: str
    strategy: Strategy
    points: list
    best_n: int
    best_subset: tuple

    @property
    def best_point(self) -> CurvePoint:
        return self.points[self.best_n - 1]

    def to_csv(self, names: Sequence[str]) -> str:
        lines = ["n,subset,accuracy,cross_entropy,is_best"]
        for pt in self.points:
            subset = ";".join(names[j] for j in pt.subset)
            lines.append(
                f"{pt.n},{subset},{pt.accuracy!r},{pt.cross_entropy!r},{int(pt.n == self.best_n)}"
            )
        return "\n".join(lines) + "\n"


def _two_classes(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"dimension mismatch: X {X.shape}, y {y.shape}")
    return X, y


def f_statistic(X, y) -> np.ndarray:
    """One-way two-group F per column; F_SENTINEL when only the means differ."""
    X, y = _two_classes(X, y)
    groups = [X[y == g] for g in (0, 1)]
    if any(len(g) < 2 for g in groups):
        raise ValueError("each class needs at least 2 rows")
    n = X.shape[0]
    grand = X.mean(axis=0)
    ssb = np.zeros(X.shape[1])
    ssw = np.zeros(X.shape[1])
    for g in groups:
        m = g.mean(axis=0)
        ssb += len(g) * (m - grand) ** 2
        ssw += ((g - m) ** 2).sum(axis=0)
    msb = ssb / 1.0
    msw = ssw / (n - 2)
    F = np.zeros(X.shape[1])
    # spread below rounding noise of the column counts as zero
    tiny = n * (1e-13 * np.abs(X).max(axis=0)) ** 2
    between = msb > tiny
    within = ssw > tiny
    F[between & within] = msb[between & within] / msw[between & within]
    F[between & ~within] = F_SENTINEL
    return F


def anova_rank(X, y) -> FeatureRanking:
    F = f_statistic(X, y)
    order = sorted(range(len(F)), key=lambda j: (-F[j], j))
    return FeatureRanking(tuple(order), F)


def lasso_rank(
    X, y, n_lambdas: int = 100, ratio: float = 1e-3, opts: linmodel.SolverOptions | None = None
) -> FeatureRanking:
    """Rank by the largest path penalty at which a coefficient is nonzero.

    Scores hold the entry penalty (0 for features that never enter). Ties and
    never-entering features are ordered by |coefficient| at the smallest
    penalty, then by index.
    """
    path = linmodel.regularization_path(X, y, n_lambdas=n_lambdas, ratio=ratio, opts=opts)
    p = path[0][1].shape[0]
    entry = np.zeros(p)
    for lam, w in reversed(path):
        entry[w != 0] = lam
    last = np.abs(path[-1][1])
    order = sorted(range(p), key=lambda j: (-entry[j], -last[j], j))
    return FeatureRanking(tuple(order), entry)


def pick_best(points: Sequence[CurvePoint], strategy: Strategy) -> tuple[int, tuple]:
    if not points:
        raise ValueError("empty curve")
    strategy = Strategy(strategy)
    best = min(points, key=lambda pt: (strategy.key(pt.accuracy, pt.cross_entropy), pt.n))
    return best.n, best.subset


def _point(n, subset, fold_metrics) -> CurvePoint:
    acc = float(np.mean([m.accuracy for m in fold_metrics]))
    ce = float(np.mean([m.cross_entropy for m in fold_metrics]))
    return CurvePoint(n, tuple(subset), acc, ce, list(fold_metrics))


def ranked_sweep(
    ranking: FeatureRanking,
    evaluator: Evaluator,
    n_max: int,
    strategy: Strategy,
    fold_rankings: Sequence[FeatureRanking] | None = None,
    method: str = "ranked",
) -> SelectionCurve:
    """Score the top-1 .. top-n_max prefixes of a ranking.

    With ``fold_rankings`` each fold uses the prefix of its own ranking while
    the curve reports the prefix of ``ranking``.
    """
    p = len(ranking.order)
    if not 1 <= n_max <= p:
        raise ValueError(f"n_max must be in 1..{p}")
    points = []
    for n in range(1, n_max + 1):
        subsets = [r.top(n) for r in fold_rankings] if fold_rankings is not None else ranking.top(n)
        try:
            fm = evaluator.evaluate(subsets)
        except Exception as exc:
            raise RuntimeError(f"evaluation failed at n={n}: {exc}") from exc
        points.append(_point(n, ranking.top(n), fm))
    best_n, best_subset = pick_best(points, strategy)
    return SelectionCurve(method, Strategy(strategy), points, best_n, best_subset)


def sfs_select(evaluator: Evaluator, strategy: Strategy, n_max: int, n_features: int) -> SelectionCurve:
    """Greedy forward selection; each step adds the candidate that best serves ``strategy``."""
    strategy = Strategy(strategy)
    if not 1 <= n_max <= n_features:
        raise ValueError(f"n_max must be in 1..{n_features}")
    chosen: list[int] = []
    points = []
    for n in range(1, n_max + 1):
        best = None
        for f in range(n_features):
            if f in chosen:
                continue
            subset = tuple(sorted(chosen + [f]))
            pt = _point(n, subset, evaluator.evaluate(subset))
            key = strategy.key(pt.accuracy, pt.cross_entropy)
            # strict comparison keeps the lowest index on ties
            if best is None or key < best[0]:
                best = (key, f, pt)
        chosen.append(best[1])
        points.append(best[2])
    best_n, best_subset = pick_best(points, strategy)
    return SelectionCurve("sfs", strategy, points, best_n, best_subset)
