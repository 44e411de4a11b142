"""Command-line driver: ``fsgate validate|baseline|sweep``.

Settings come from an optional flat ``key = value`` config file; command
line flags override it. Exit status: 0 success, 1 strict-validation
failure, 2 input or config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fsgate import __version__, cv, linmodel, metrics
from fsgate._backend import BACKEND
from fsgate.dataset import ColumnSchema, DatasetError, atomic_write_text, load_csv, validate_ranges
from fsgate.svg import line_chart

log = logging.getLogger("fsgate")

EXIT_OK, EXIT_STRICT, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    data: str | None = None
    schema: ColumnSchema = field(default_factory=ColumnSchema.uci)
    k: int = 4
    seed: int = 0
    seeds: tuple | None = None
    methods: tuple = cv.METHODS
    strategies: tuple = ("max_accuracy", "min_cross_entropy")
    nested: bool = False
    strict: bool = False
    out: str = "fsgate_out"
    solver: linmodel.SolverOptions = field(default_factory=linmodel.SolverOptions)
    n_lambdas: int = 100
    lasso_ratio: float = 1e-3

    def validate(self) -> None:
        if self.data is None:
            raise ConfigError("no dataset given (--data or 'data' in the config file)")
        if self.k < 2:
            raise ConfigError(f"k must be at least 2, got {self.k}")
        if not self.methods or any(m not in cv.METHODS for m in self.methods):
            raise ConfigError(f"methods must be a non-empty subset of {','.join(cv.METHODS)}")
        valid = {"max_accuracy", "min_cross_entropy"}
        if not self.strategies or any(s not in valid for s in self.strategies):
            raise ConfigError(f"strategies must be a non-empty subset of {','.join(sorted(valid))}")

    def experiment(self, seed: int) -> cv.ExperimentConfig:
        return cv.ExperimentConfig(
            k=self.k, seed=seed, methods=self.methods, strategies=self.strategies,
            nested=self.nested, solver=self.solver, n_lambdas=self.n_lambdas,
            lasso_ratio=self.lasso_ratio,
        )

    def echo(self) -> list[tuple[str, str]]:
        s = self.schema
        return [
            ("data", str(self.data)),
            ("k", str(self.k)),
            ("seed", str(self.seed)),
            ("seeds", ",".join(map(str, self.seeds)) if self.seeds else ""),
            ("methods", ",".join(self.methods)),
            ("strategies", ",".join(self.strategies)),
            ("nested", str(self.nested).lower()),
            ("tolerance", repr(self.solver.tolerance)),
            ("max_iters", str(self.solver.max_iters)),
            ("ridge", repr(self.solver.ridge)),
            ("n_lambdas", str(self.n_lambdas)),
            ("lasso_ratio", repr(self.lasso_ratio)),
            ("header", str(s.header).lower()),
            ("delimiter", s.delimiter),
            ("subject_column", "" if s.subject_column is None else str(s.subject_column)),
            ("class_column", str(s.class_column)),
            ("feature_columns", ",".join(map(str, s.feature_columns))),
            ("ignore_columns", ",".join(map(str, s.ignore_columns))),
            ("rows_per_subject", str(s.rows_per_subject or "")),
        ]


def _split(v: str) -> tuple:
    return tuple(x.strip() for x in v.split(",") if x.strip())


def _col(v: str):
    return int(v) if v.strip().lstrip("-").isdigit() else v.strip()


def _bool(v: str) -> bool:
    if v.strip().lower() in ("1", "true", "yes", "on"):
        return True
    if v.strip().lower() in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def read_config_file(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        k, _, v = line.partition("=")
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    kv = read_config_file(args.config) if args.config else {}
    for key in ("data", "k", "seed", "seeds", "methods", "strategies", "out", "rows_per_subject"):
        v = getattr(args, key, None)
        if v is not None:
            kv[key] = str(v)
    for key in ("nested", "strict"):
        if getattr(args, key, False):
            kv[key] = "true"

    cfg = RunConfig()
    schema = dict(
        subject_column=cfg.schema.subject_column, feature_columns=cfg.schema.feature_columns,
        class_column=cfg.schema.class_column, ignore_columns=cfg.schema.ignore_columns,
        header=cfg.schema.header, delimiter=cfg.schema.delimiter, rows_per_subject=None,
    )
    solver = dict(tolerance=cfg.solver.tolerance, max_iters=cfg.solver.max_iters, ridge=cfg.solver.ridge)
    try:
        for key, v in kv.items():
            if key == "data":
                cfg.data = v
            elif key == "k":
                cfg.k = int(v)
            elif key == "seed":
                cfg.seed = int(v)
            elif key == "seeds":
                cfg.seeds = tuple(int(s) for s in _split(v)) or None
            elif key == "methods":
                cfg.methods = _split(v)
            elif key == "strategies":
                cfg.strategies = _split(v)
            elif key in ("nested", "strict"):
                setattr(cfg, key, _bool(v))
            elif key == "out":
                cfg.out = v
            elif key in ("tolerance", "ridge"):
                solver[key] = float(v)
            elif key == "max_iters":
                solver[key] = int(v)
            elif key == "n_lambdas":
                cfg.n_lambdas = int(v)
            elif key == "lasso_ratio":
                cfg.lasso_ratio = float(v)
            elif key == "header":
                schema["header"] = _bool(v)
            elif key == "delimiter":
                schema["delimiter"] = "\t" if v in ("tab", "\\t") else v
            elif key == "subject_column":
                schema["subject_column"] = _col(v) if v else None
            elif key == "class_column":
                schema["class_column"] = _col(v)
            elif key == "feature_columns":
                schema["feature_columns"] = tuple(_col(c) for c in _split(v))
            elif key == "ignore_columns":
                schema["ignore_columns"] = tuple(_col(c) for c in _split(v))
            elif key == "rows_per_subject":
                schema["rows_per_subject"] = int(v) if v else None
                if v:
                    schema["subject_column"] = None
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from None
    cfg.schema = ColumnSchema(**schema)
    cfg.solver = linmodel.SolverOptions(**solver)
    cfg.validate()
    return cfg


def _load(cfg: RunConfig):
    path = Path(cfg.data)
    if not path.is_file():
        raise ConfigError(f"dataset not found: {path}")
    return load_csv(path, cfg.schema), hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, cfg: RunConfig, data_hash: str, extra=()) -> None:
    lines = [
        f"software = fsgate {__version__}",
        f"kernel_backend = {BACKEND}",
        f"dataset_sha256 = {data_hash}",
    ]
    lines += [f"{k} = {v}" for k, v in cfg.echo()]
    lines += [
        "fold_std = population (denominator k)",
        "classifier = logistic regression, unpenalized unless ridge > 0 (baseline and refits)",
        "subject_rule = mean record probability >= 0.5 -> PWP",
    ]
    if not cfg.nested:
        lines.append("selection_note = subset sizes chosen on the same folds that are reported (optimistic)")
    lines += [f"{k} = {v}" for k, v in extra]
    atomic_write_text(out / "manifest.txt", "\n".join(lines) + "\n")


def _print_summary(result: cv.ExperimentResult, stream=None) -> None:
    stream = stream or sys.stdout
    cols = ("accuracy", "specificity", "sensitivity", "precision", "f1", "mcc")
    stream.write(f"{'fs':<6} {'strategy':<18} {'n':>3} " + " ".join(f"{c:>13}" for c in cols) + "\n")
    for r in result.rows:
        cells = " ".join(
            f"{getattr(r.summary.mean, c):>6.3f} ({getattr(r.summary.std, c):.3f})" for c in cols
        )
        stream.write(f"{r.method:<6} {r.strategy:<18} {r.n_selected:>3} {cells}\n")


def _write_curves(out: Path, result: cv.ExperimentResult) -> None:
    for (method, strategy), curve in result.curves.items():
        stem = f"curve_{method}_{strategy}"
        atomic_write_text(out / f"{stem}.csv", curve.to_csv(result.feature_names))
        metric = "accuracy" if (method == "sfs" or strategy == "max_accuracy") else "cross_entropy"
        svg = line_chart(
            [pt.n for pt in curve.points],
            [getattr(pt, metric) for pt in curve.points],
            marker_x=curve.best_n,
            title=f"{method} / {strategy}",
            ylabel=metric.replace("_", "-"),
        )
        atomic_write_text(out / f"{stem}.svg", svg)


def _run(cfg: RunConfig, d, data_hash: str, baseline_only: bool) -> None:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = cfg.seeds or (cfg.seed,)
    multi = cfg.seeds is not None
    rows_by_seed = []
    for seed in seeds:
        ecfg = cfg.experiment(seed)
        if baseline_only:
            d.check_min_subjects(cfg.k)
            plan = cv.stratified_group_kfold(d.subject_labels(), cfg.k, seed)
            fm = cv.evaluate_subset(d, range(d.X.shape[1]), plan, cfg.solver)
            all_f = tuple(range(d.X.shape[1]))
            result = cv.ExperimentResult(
                ecfg.echo(), d.feature_names,
                [cv.ResultRow("none", "none", len(all_f), all_f, metrics.summarize_folds(fm), fm)], {},
            )
        else:
            result = cv.run_experiment(d, ecfg)
        target = out / f"seed_{seed}" if multi else out
        target.mkdir(parents=True, exist_ok=True)
        atomic_write_text(target / "results.csv", result.results_csv())
        _write_curves(target, result)
        if multi:
            write_manifest(target, cfg, data_hash, [("run_seed", str(seed))])
        sys.stdout.write(f"seed {seed}\n")
        _print_summary(result)
        rows_by_seed.append((seed, result))

    if multi:
        lines = [cv.results_header(with_seed=True)]
        for seed, result in rows_by_seed:
            lines += [cv.result_line(r, result.feature_names, seed) for r in result.rows]
        atomic_write_text(out / "results.csv", "\n".join(lines) + "\n")
        atomic_write_text(out / "summary.csv", median_summary(rows_by_seed))
    write_manifest(out, cfg, data_hash)


def median_summary(rows_by_seed) -> str:
    """Median over seeds of each row's fold-mean metrics and subset size."""
    groups: dict = {}
    for _, result in rows_by_seed:
        for r in result.rows:
            groups.setdefault((r.method, r.strategy), []).append(r)
    cols = ["fs", "strategy", "n_seeds", "n_features_median"]
    cols += [f"{m}_median" for m in cv.RESULT_METRICS]
    lines = [",".join(cols)]
    for (method, strategy), rows in groups.items():
        cells = [method, strategy, str(len(rows)), repr(float(np.median([r.n_selected for r in rows])))]
        cells += [repr(float(np.median([getattr(r.summary.mean, m) for r in rows]))) for m in cv.RESULT_METRICS]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_validate(cfg: RunConfig) -> int:
    d, _ = _load(cfg)
    report = validate_ranges(d)
    counts = d.class_counts()
    print(f"{d.n_rows} rows, {counts[0] + counts[1]} subjects ({counts[1]} PWP, {counts[0]} healthy)")
    print(report.format())
    if cfg.strict and report.warnings:
        return EXIT_STRICT
    return EXIT_OK


def cmd_baseline(cfg: RunConfig) -> int:
    d, h = _load(cfg)
    _run(cfg, d, h, baseline_only=True)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    d, h = _load(cfg)
    _run(cfg, d, h, baseline_only=False)
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "baseline": cmd_baseline, "sweep": cmd_sweep}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fsgate",
        description="Subject-level feature selection and logistic-regression evaluation.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat key = value config file; flags override it")
    parser.add_argument("--data", help="recording table (default layout: id, 26 features, UPDRS, class)")
    parser.add_argument("--k", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--seeds", help="comma-separated seeds for a multi-seed run")
    parser.add_argument("--methods", help="comma-separated subset of anova,lasso,sfs")
    parser.add_argument("--strategies", help="comma-separated subset of max_accuracy,min_cross_entropy")
    parser.add_argument("--nested", action="store_true", help="select on inner folds of each training fold")
    parser.add_argument("--rows-per-subject", type=int, dest="rows_per_subject",
                        help="assign subjects by consecutive row blocks (no id column)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--strict", action="store_true", help="validate: exit 1 on range warnings")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", linmodel.ConvergenceWarning)
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except (linmodel.TrainingError, ArithmeticError, RuntimeError) as exc:
        print(f"fsgate: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DatasetError, OSError, ValueError) as exc:
        print(f"fsgate: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
