"""Subject-grouped stratified k-fold evaluation and the experiment runner.

Every recording of a subject lands on the same side of each split. Per fold,
the power transform and the classifier are fit on the training subjects
only; validation recordings are scored and collapsed to one prediction per
subject.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from fsgate import featsel, linmodel, metrics, preprocess
from fsgate.dataset import Dataset
from fsgate.featsel import Strategy
from fsgate.metrics import MetricSet, MetricSummary

log = logging.getLogger(__name__)

METHODS = ("anova", "sfs", "lasso")
STRATEGIES = (Strategy.MAX_ACCURACY, Strategy.MIN_CROSS_ENTROPY)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    folds: tuple  # k tuples of subject ids
    seed: int

    def validation_mask(self, subjects, fold: int) -> np.ndarray:
        held = set(self.folds[fold])
        return np.array([s in held for s in subjects], dtype=bool)


def stratified_group_kfold(subjects: Sequence[tuple], k: int, seed: int = 0) -> FoldPlan:
    """Shuffle subjects within each class and deal them round-robin into k folds.

    The second class continues dealing where the first stopped, so fold sizes
    differ by at most one.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    by_class: dict = {}
    for sid, lab in subjects:
        by_class.setdefault(int(lab), []).append(str(sid))
    for lab, ids in by_class.items():
        if len(ids) < k:
            raise ValueError(f"class {lab} has {len(ids)} subjects, fewer than k={k}")
    rng = np.random.default_rng(seed)
    folds: list[list[str]] = [[] for _ in range(k)]
    pos = 0
    for lab in sorted(by_class):
        ids = sorted(set(by_class[lab]))
        for i in rng.permutation(len(ids)):
            folds[pos % k].append(ids[i])
            pos += 1
    return FoldPlan(k, tuple(tuple(f) for f in folds), seed)


@dataclass
class FoldResult:
    fold: int
    params: preprocess.TransformParams
    model: linmodel.LogisticModel
    predictions: list
    metrics: MetricSet


def _fit_and_score(X_tr, y_tr, X_va, y_va, subjects_va, opts) -> tuple:
    model = linmodel.train(X_tr, y_tr, opts=opts)
    probs = linmodel.predict_proba(model, X_va)
    preds = metrics.aggregate_subjects(probs, subjects_va, y_va)
    return model, preds, metrics.metric_set(preds)


def evaluate_subset(
    d: Dataset,
    subset: Sequence[int],
    plan: FoldPlan,
    opts: linmodel.SolverOptions | None = None,
    details: bool = False,
):
    """Per-fold metrics for one feature subset, fitting everything from scratch.

    Returns a list of :class:`MetricSet`, or of :class:`FoldResult` with
    ``details=True``.
    """
    subset = sorted(set(int(j) for j in subset))
    if not subset:
        raise ValueError("subset is empty")
    opts = opts or linmodel.SolverOptions()
    out = []
    for i in range(plan.k):
        va = plan.validation_mask(d.subjects, i)
        tr = ~va
        params = preprocess.fit(d.X[tr][:, subset])
        X_tr = preprocess.transform(d.X[tr][:, subset], params)
        X_va = preprocess.transform(d.X[va][:, subset], params)
        try:
            model, preds, ms = _fit_and_score(X_tr, d.y[tr], X_va, d.y[va], d.subjects[va], opts)
        except linmodel.TrainingError as exc:
            raise linmodel.TrainingError(f"fold {i}: {exc}") from exc
        out.append(FoldResult(i, params, model, preds, ms) if details else ms)
    return out


class SubsetEvaluator:
    """Cached per-fold evaluation of feature subsets.

    Column transforms are fit once per fold on all features; a subset uses the
    matching columns, which is identical to fitting on the subset alone
    because every column is fit independently.
    """

    def __init__(self, d: Dataset, plan: FoldPlan, opts: linmodel.SolverOptions | None = None):
        self.dataset = d
        self.plan = plan
        self.opts = opts or linmodel.SolverOptions()
        self.n_folds = plan.k
        self.folds = []
        for i in range(plan.k):
            va = plan.validation_mask(d.subjects, i)
            tr = ~va
            params = preprocess.fit(d.X[tr])
            self.folds.append(
                dict(
                    params=params,
                    X_tr=preprocess.transform(d.X[tr], params),
                    y_tr=d.y[tr],
                    X_va=preprocess.transform(d.X[va], params),
                    y_va=d.y[va],
                    s_va=d.subjects[va],
                )
            )
        self._cache: dict = {}
        self.n_fits = 0

    def _fold(self, i: int, subset: tuple) -> MetricSet:
        key = (i, subset)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        f = self.folds[i]
        cols = list(subset)
        try:
            _, _, ms = _fit_and_score(
                np.ascontiguousarray(f["X_tr"][:, cols]), f["y_tr"],
                f["X_va"][:, cols], f["y_va"], f["s_va"], self.opts,
            )
        except linmodel.TrainingError as exc:
            raise linmodel.TrainingError(f"fold {i}: {exc}") from exc
        self.n_fits += 1
        self._cache[key] = ms
        return ms

    def score_fold(self, i: int, subset) -> MetricSet:
        return self._fold(i, tuple(sorted(set(int(j) for j in subset))))

    def evaluate(self, subsets) -> list[MetricSet]:
        if len(subsets) and not isinstance(subsets[0], (int, np.integer)):
            per_fold = [tuple(sorted(set(int(j) for j in s))) for s in subsets]
            if len(per_fold) != self.n_folds:
                raise ValueError(f"need {self.n_folds} per-fold subsets, got {len(per_fold)}")
        else:
            per_fold = [tuple(sorted(set(int(j) for j in subsets)))] * self.n_folds
        if any(len(s) == 0 for s in per_fold):
            raise ValueError("subset is empty")
        return [self._fold(i, s) for i, s in enumerate(per_fold)]

    def fold_train(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Transformed training matrix and labels of fold ``i``."""
        f = self.folds[i]
        return f["X_tr"], f["y_tr"]


@dataclass
class ExperimentConfig:
    k: int = 4
    seed: int = 0
    methods: tuple = METHODS
    strategies: tuple = tuple(s.value for s in STRATEGIES)
    nested: bool = False
    solver: linmodel.SolverOptions = field(default_factory=linmodel.SolverOptions)
    n_lambdas: int = 100
    lasso_ratio: float = 1e-3
    n_max_ranked: int = 26
    n_max_sfs: int = 25

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise ValueError(f"methods must be a non-empty subset of {METHODS}")
        if not self.strategies:
            raise ValueError("strategies must be non-empty")
        self.strategies = tuple(Strategy(s).value for s in self.strategies)

    def echo(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "methods": ",".join(self.methods),
            "strategies": ",".join(self.strategies),
            "nested": self.nested,
            "tolerance": self.solver.tolerance,
            "max_iters": self.solver.max_iters,
            "ridge": self.solver.ridge,
            "n_lambdas": self.n_lambdas,
            "lasso_ratio": self.lasso_ratio,
            "n_max_ranked": self.n_max_ranked,
            "n_max_sfs": self.n_max_sfs,
        }


@dataclass
class ResultRow:
    method: str  # "none" for the all-features baseline
    strategy: str
    n_selected: int
    subset: tuple
    summary: MetricSummary
    fold_metrics: list


@dataclass
class ExperimentResult:
    config: dict
    feature_names: tuple
    rows: list
    curves: dict  # (method, strategy) -> SelectionCurve

    def row(self, method: str, strategy: str = "none") -> ResultRow:
        for r in self.rows:
            if r.method == method and r.strategy == strategy:
                return r
        raise KeyError((method, strategy))

    def results_csv(self, seed: int | None = None) -> str:
        return results_csv(self.rows, self.feature_names, seed=seed)


RESULT_METRICS = ("accuracy", "specificity", "sensitivity", "precision", "f1", "mcc", "cross_entropy")


def results_header(with_seed: bool = False) -> str:
    cols = (["seed"] if with_seed else []) + ["fs", "strategy", "n_features"]
    for m in RESULT_METRICS:
        cols += [f"{m}_mean", f"{m}_std"]
    return ",".join(cols + ["subset"])


def result_line(r: ResultRow, names, seed: int | None = None) -> str:
    cells = ([str(seed)] if seed is not None else []) + [r.method, r.strategy, str(r.n_selected)]
    for m in RESULT_METRICS:
        cells += [repr(getattr(r.summary.mean, m)), repr(getattr(r.summary.std, m))]
    cells.append(";".join(names[j] for j in r.subset))
    return ",".join(cells)


def results_csv(rows, names, seed: int | None = None) -> str:
    lines = [results_header(seed is not None)]
    lines += [result_line(r, names, seed) for r in rows]
    return "\n".join(lines) + "\n"


def _rank(method: str, X, y, cfg: ExperimentConfig) -> featsel.FeatureRanking:
    if method == "anova":
        return featsel.anova_rank(X, y)
    return featsel.lasso_rank(X, y, n_lambdas=cfg.n_lambdas, ratio=cfg.lasso_ratio, opts=cfg.solver)


def full_data_ranking(d: Dataset, method: str, cfg: ExperimentConfig | None = None) -> featsel.FeatureRanking:
    """Ranking on all rows after fitting the transform on all rows."""
    cfg = cfg or ExperimentConfig()
    Xt = preprocess.transform(d.X, preprocess.fit(d.X))
    return _rank(method, Xt, d.y, cfg)


def _select(d: Dataset, plan: FoldPlan, cfg: ExperimentConfig, method: str, strategies, ev=None) -> dict:
    """Selection curves for one method, keyed by strategy."""
    ev = ev or SubsetEvaluator(d, plan, cfg.solver)
    p = d.X.shape[1]
    curves = {}
    if method == "sfs":
        for s in strategies:
            curves[s] = featsel.sfs_select(ev, Strategy(s), min(cfg.n_max_sfs, p), p)
        return curves
    fold_rankings = [_rank(method, *ev.fold_train(i), cfg) for i in range(plan.k)]
    reported = full_data_ranking(d, method, cfg)
    first = None
    for s in strategies:
        if first is None:
            first = featsel.ranked_sweep(
                reported, ev, min(cfg.n_max_ranked, p), Strategy(s), fold_rankings, method
            )
            curves[s] = first
        else:
            best_n, best_subset = featsel.pick_best(first.points, Strategy(s))
            curves[s] = featsel.SelectionCurve(method, Strategy(s), first.points, best_n, best_subset)
    return curves


def _subset_dataset(d: Dataset, mask) -> Dataset:
    return Dataset(
        X=d.X[mask], y=d.y[mask], subjects=d.subjects[mask],
        recording_index=d.recording_index[mask], feature_names=d.feature_names,
    )


def _nested(d: Dataset, plan: FoldPlan, cfg: ExperimentConfig, method: str) -> tuple[dict, dict]:
    """Select on an inner (k-1)-fold split of each outer training fold.

    Returns per-strategy rows (outer validation metrics of each fold's own
    selection) and per-strategy curves averaged over outer folds.
    """
    outer = SubsetEvaluator(d, plan, cfg.solver)
    per_strategy = {s: {"subsets": [], "metrics": [], "curves": []} for s in cfg.strategies}
    for i in range(plan.k):
        tr = ~plan.validation_mask(d.subjects, i)
        inner_d = _subset_dataset(d, tr)
        inner_plan = stratified_group_kfold(inner_d.subject_labels(), max(2, plan.k - 1), cfg.seed)
        curves = _select(inner_d, inner_plan, cfg, method, cfg.strategies)
        for s, c in curves.items():
            per_strategy[s]["subsets"].append(c.best_subset)
            per_strategy[s]["curves"].append(c)
            per_strategy[s]["metrics"].append(outer.score_fold(i, c.best_subset))
    rows, curves = {}, {}
    for s, acc in per_strategy.items():
        sizes = sorted(len(x) for x in acc["subsets"])
        counts = Counter(j for sub in acc["subsets"] for j in sub)
        majority = tuple(sorted(j for j, c in counts.items() if 2 * c >= plan.k))
        rows[s] = (sizes[(len(sizes) - 1) // 2], majority, acc["metrics"])
        curves[s] = _average_curves(acc["curves"], method, Strategy(s), plan.k)
    return rows, curves


def _average_curves(curves, method, strategy, k) -> featsel.SelectionCurve:
    points = []
    for pts in zip(*(c.points for c in curves)):
        counts = Counter(j for pt in pts for j in pt.subset)
        subset = tuple(sorted(j for j, c in counts.items() if 2 * c >= k))
        points.append(
            featsel.CurvePoint(
                pts[0].n, subset,
                float(np.mean([pt.accuracy for pt in pts])),
                float(np.mean([pt.cross_entropy for pt in pts])),
            )
        )
    best_n, best_subset = featsel.pick_best(points, strategy)
    return featsel.SelectionCurve(method, strategy, points, best_n, best_subset)


def run_experiment(d: Dataset, cfg: ExperimentConfig | None = None) -> ExperimentResult:
    """Baseline plus every requested method x strategy row, with their curves."""
    cfg = cfg or ExperimentConfig()
    d.check_min_subjects(max(2, cfg.k))
    plan = stratified_group_kfold(d.subject_labels(), cfg.k, cfg.seed)
    all_features = tuple(range(d.X.shape[1]))
    ev = SubsetEvaluator(d, plan, cfg.solver)
    base = ev.evaluate(all_features)
    rows = [ResultRow("none", "none", len(all_features), all_features, metrics.summarize_folds(base), base)]
    curves = {}
    for method in (m for m in METHODS if m in cfg.methods):
        log.info("selecting features with %s (seed %d)", method, cfg.seed)
        if cfg.nested:
            nrows, ncurves = _nested(d, plan, cfg, method)
            for s in cfg.strategies:
                n_sel, subset, fm = nrows[s]
                rows.append(ResultRow(method, s, n_sel, subset, metrics.summarize_folds(fm), fm))
                curves[(method, s)] = ncurves[s]
            continue
        for s, c in _select(d, plan, cfg, method, cfg.strategies, ev).items():
            fm = c.best_point.fold_metrics
            rows.append(ResultRow(method, s, c.best_n, c.best_subset, metrics.summarize_folds(fm), fm))
            curves[(method, s)] = c
    return ExperimentResult(cfg.echo(), d.feature_names, rows, curves)
