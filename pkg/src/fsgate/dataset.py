"""Recording-level voice-feature datasets grouped by subject.

A :class:`Dataset` holds one row per recording, 26 acoustic features each,
with a subject id and a binary class (1 = PWP, 0 = healthy). Subjects are
never split: every recording of a subject carries the same label.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

N_FEATURES = 26

# (canonical name, display name, mean, std, min, max) as published with the
# 40-subject corpus; used for range warnings only.
FEATURE_TABLE = [
    ("jitter_local", "Jitter (local)", 2.68, 1.78, 0.19, 14.38),
    ("jitter_local_absolute", "Jitter (local, absolute)", 0.0002, 0.0001, 0.000006, 0.0008),
    ("jitter_rap", "Jitter (rap)", 1.25, 0.98, 0.06, 8.02),
    ("jitter_ppq5", "Jitter (ppq5)", 1.35, 1.14, 0.08, 13.54),
    ("jitter_ddp", "Jitter (ddp)", 3.74, 2.94, 0.19, 24.05),
    ("shimmer_local", "Shimmer (local)", 12.92, 5.45, 1.19, 41.14),
    ("shimmer_local_db", "Shimmer (local, dB)", 1.19, 0.42, 0.10, 2.72),
    ("shimmer_apq3", "Shimmer (apq3)", 5.70, 3.02, 0.50, 25.82),
    ("shimmer_apq5", "Shimmer (apq5)", 7.98, 4.84, 0.71, 72.86),
    ("shimmer_apq11", "Shimmer (apq11)", 12.21, 6.02, 0.52, 44.76),
    ("shimmer_dda", "Shimmer (dda)", 17.10, 9.05, 1.49, 77.46),
    ("autocorrelation", "Autocorrelation", 0.85, 0.09, 0.54, 0.99),
    ("noise_to_harmonic", "Noise-to-Harmonic", 0.23, 0.15, 0.002, 0.87),
    ("harmonic_to_noise", "Harmonic-to-Noise", 9.99, 4.29, 0.70, 28.42),
    ("median_pitch", "Median pitch", 163.37, 56.02, 81.46, 468.62),
    ("mean_pitch", "Mean pitch", 168.73, 55.97, 82.36, 470.46),
    ("std_pitch", "Standard dev. of pitch", 27.55, 36.67, 0.53, 293.88),
    ("min_pitch", "Minimum pitch", 134.54, 47.06, 67.96, 452.08),
    ("max_pitch", "Maximum pitch", 234.86, 121.54, 85.54, 597.97),
    ("number_of_pulses", "Number of pulses", 109.74, 150.03, 0.0, 1490.0),
    ("number_of_periods", "Number of periods", 105.97, 149.42, 0.0, 1489.0),
    ("mean_period", "Mean period", 0.007, 0.002, 0.002, 0.01),
    ("std_period", "Standard dev. of period", 0.001, 0.001, 0.0001, 0.01),
    ("fraction_unvoiced_frames", "Fraction of unvoiced frames", 27.68, 20.98, 0.0, 88.16),
    ("number_of_voice_breaks", "Number of voice breaks", 1.13, 1.61, 0.0, 12.0),
    ("degree_voice_breaks", "Degree of voice breaks", 12.37, 15.16, 0.0, 69.12),
]

FEATURE_NAMES = tuple(row[0] for row in FEATURE_TABLE)
DISPLAY_NAMES = {row[0]: row[1] for row in FEATURE_TABLE}


class DatasetError(ValueError):
    """Base class for ingestion failures."""


class SchemaError(DatasetError):
    pass


class ParseError(DatasetError):
    pass


class IntegrityError(DatasetError):
    pass


@dataclass(frozen=True)
class ColumnSchema:
    """Where to find ids, features and labels in a delimited text table.

    Columns are given either by header name (``header=True``) or by 0-based
    position. ``subject_column=None`` assigns subjects by consecutive blocks of
    ``rows_per_subject`` rows.
    """

    subject_column: str | int | None = 0
    feature_columns: tuple = tuple(range(1, 27))
    class_column: str | int = 28
    ignore_columns: tuple = (27,)
    header: bool = False
    delimiter: str = ","
    rows_per_subject: int | None = None

    @classmethod
    def uci(cls) -> "ColumnSchema":
        """Layout of the public training file: id, 26 features, UPDRS, class."""
        return cls()

    @classmethod
    def canonical(cls) -> "ColumnSchema":
        """Layout written by :func:`write_csv`."""
        return cls(
            subject_column="subject_id",
            feature_columns=FEATURE_NAMES,
            class_column="class",
            ignore_columns=("updrs",),
            header=True,
        )


@dataclass(frozen=True)
class Dataset:
    """Immutable recording table.

    ``X`` is ``(n_rows, 26)``, ``subjects`` holds the id per row (string),
    ``y`` the 0/1 label per row and ``recording_index`` the 0-based position
    of the row within its subject.
    """

    X: np.ndarray
    y: np.ndarray
    subjects: np.ndarray
    recording_index: np.ndarray
    feature_names: tuple = FEATURE_NAMES

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        y = np.array(self.y, dtype=np.int64)
        subjects = np.array([str(s) for s in self.subjects], dtype=object)
        rec = np.array(self.recording_index, dtype=np.int64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise SchemaError(
                f"expected {len(self.feature_names)} feature columns, got shape {X.shape}"
            )
        if not (len(y) == len(subjects) == len(rec) == X.shape[0]):
            raise SchemaError("row arrays have different lengths")
        if X.shape[0] == 0:
            raise ParseError("dataset has no rows")
        if not np.all(np.isfinite(X)):
            r, c = np.argwhere(~np.isfinite(X))[0]
            raise ParseError(f"non-finite value at row {r}, column {self.feature_names[c]}")
        if not np.all((y == 0) | (y == 1)):
            raise ParseError("class labels must be 0 or 1")
        _check_subject_labels(subjects, y)
        for arr in (X, y, rec):
            arr.setflags(write=False)
        subjects.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "subjects", subjects)
        object.__setattr__(self, "recording_index", rec)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def subject_labels(self) -> list[tuple[str, int]]:
        """(subject id, label) pairs in order of first appearance."""
        seen = {}
        for s, lab in zip(self.subjects, self.y):
            if s not in seen:
                seen[s] = int(lab)
        return list(seen.items())

    def class_counts(self) -> dict[int, int]:
        counts = {0: 0, 1: 0}
        for _, lab in self.subject_labels():
            counts[lab] += 1
        return counts

    def check_min_subjects(self, per_class: int = 2) -> None:
        counts = self.class_counts()
        for lab, c in counts.items():
            if c < per_class:
                raise IntegrityError(f"class {lab} has {c} subjects; need at least {per_class}")


def _check_subject_labels(subjects, y):
    first = {}
    for s, lab in zip(subjects, y):
        prev = first.setdefault(s, lab)
        if prev != lab:
            raise IntegrityError(f"subject {s!r} has recordings labelled both 0 and 1")


def _recording_indices(subjects) -> np.ndarray:
    counter: dict = {}
    out = np.empty(len(subjects), dtype=np.int64)
    for i, s in enumerate(subjects):
        out[i] = counter.get(s, 0)
        counter[s] = out[i] + 1
    return out


def _resolve(col, header: list[str] | None, ncols: int) -> int:
    if isinstance(col, str) and header is None:
        if col.isdigit():
            col = int(col)
        else:
            raise SchemaError(f"column {col!r} given by name but the file has no header")
    if isinstance(col, str):
        if col not in header:
            raise SchemaError(f"missing column {col!r}")
        return header.index(col)
    if not 0 <= col < ncols:
        raise SchemaError(f"missing column {col} (file has {ncols} columns)")
    return col


def load_csv(path, schema: ColumnSchema | None = None) -> Dataset:
    """Read a delimited table into a :class:`Dataset`.

    Ignored columns (UPDRS) are dropped. Subject order and row order follow
    the file.
    """
    schema = schema or ColumnSchema.uci()
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=schema.delimiter) if any(c.strip() for c in r)]
    header = None
    if schema.header:
        if not rows:
            raise ParseError(f"{path}: empty file")
        header = [h.strip() for h in rows[0]]
        rows = rows[1:]
    if not rows:
        raise ParseError(f"{path}: no data rows")
    ncols = len(header) if header is not None else len(rows[0])

    feat_idx = [_resolve(c, header, ncols) for c in schema.feature_columns]
    if len(feat_idx) != N_FEATURES:
        raise SchemaError(f"schema names {len(feat_idx)} feature columns, expected {N_FEATURES}")
    cls_idx = _resolve(schema.class_column, header, ncols)
    sid_idx = None
    if schema.subject_column is not None:
        sid_idx = _resolve(schema.subject_column, header, ncols)
    elif not schema.rows_per_subject:
        raise SchemaError("schema needs a subject column or rows_per_subject")

    X = np.empty((len(rows), N_FEATURES))
    y = np.empty(len(rows), dtype=np.int64)
    subjects = []
    line_offset = 2 if header is not None else 1
    for r, row in enumerate(rows):
        if len(row) < ncols:
            raise ParseError(f"row {r + line_offset}: expected {ncols} cells, got {len(row)}")
        for j, c in enumerate(feat_idx):
            cell = row[c].strip()
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(
                    f"row {r + line_offset}, column {c}: non-numeric feature value {cell!r}"
                ) from None
            if not math.isfinite(v):
                raise ParseError(f"row {r + line_offset}, column {c}: non-finite value {cell!r}")
            X[r, j] = v
        cell = row[cls_idx].strip()
        try:
            lab = float(cell)
        except ValueError:
            raise ParseError(f"row {r + line_offset}, column {cls_idx}: bad class {cell!r}") from None
        if lab not in (0.0, 1.0):
            raise ParseError(f"row {r + line_offset}, column {cls_idx}: class must be 0/1, got {cell!r}")
        y[r] = int(lab)
        if sid_idx is not None:
            subjects.append(row[sid_idx].strip())
        else:
            subjects.append(str(r // schema.rows_per_subject))

    return Dataset(X=X, y=y, subjects=subjects, recording_index=_recording_indices(subjects))


def write_csv(d: Dataset, path) -> None:
    """Write with canonical headers; floats use ``repr`` so reading back is exact."""
    path = Path(path)
    lines = [",".join(("subject_id", "class") + d.feature_names)]
    for i in range(d.n_rows):
        cells = [d.subjects[i], str(int(d.y[i]))] + [repr(float(v)) for v in d.X[i]]
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class FeatureCheck:
    name: str
    mean: float
    std: float
    ref_mean: float
    ref_std: float
    ref_min: float
    ref_max: float
    below: int = 0
    above: int = 0

    @property
    def warnings(self) -> list[str]:
        out = []
        if self.below:
            out.append(f"{self.name}: {self.below} value(s) below {self.ref_min}")
        if self.above:
            out.append(f"{self.name}: {self.above} value(s) above {self.ref_max}")
        return out


@dataclass
class ValidationReport:
    features: list[FeatureCheck] = field(default_factory=list)

    @property
    def warnings(self) -> list[str]:
        return [w for f in self.features for w in f.warnings]

    def __getitem__(self, name: str) -> FeatureCheck:
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(name)

    def format(self) -> str:
        lines = [f"{'feature':<26} {'mean':>10} {'std':>10} {'ref mean':>10} {'ref std':>10} {'out':>5}"]
        for f in self.features:
            lines.append(
                f"{f.name:<26} {f.mean:>10.4g} {f.std:>10.4g} {f.ref_mean:>10.4g} "
                f"{f.ref_std:>10.4g} {f.below + f.above:>5d}"
            )
        ws = self.warnings
        lines.append(f"{len(ws)} warning(s)")
        lines.extend(f"  warning: {w}" for w in ws)
        return "\n".join(lines)


def validate_ranges(d: Dataset) -> ValidationReport:
    """Compare each feature against the reference corpus ranges.

    Out-of-range values produce warnings only; the reference statistics
    describe one specific recording campaign.
    """
    report = ValidationReport()
    for j, (name, _, mean, std, lo, hi) in enumerate(FEATURE_TABLE):
        col = d.X[:, j]
        report.features.append(
            FeatureCheck(
                name=name,
                mean=float(col.mean()),
                std=float(col.std(ddof=1)) if len(col) > 1 else 0.0,
                ref_mean=mean,
                ref_std=std,
                ref_min=lo,
                ref_max=hi,
                below=int(np.sum(col < lo)),
                above=int(np.sum(col > hi)),
            )
        )
    return report


def synthesize(
    seed: int,
    n_subjects_per_class: int = 20,
    n_recordings: int = 26,
    informative_features: Sequence[int] = (),
    effect_size: float = 1.0,
    subject_sd: float = 1.0,
) -> Dataset:
    """Gaussian test data with planted class signal and per-subject random effects.

    Each value is ``effect_size * label`` (informative features only) plus a
    per-subject offset ``N(0, subject_sd**2)`` plus recording noise ``N(0, 1)``.
    """
    if n_subjects_per_class < 2:
        raise ValueError("need at least 2 subjects per class")
    if effect_size < 0:
        raise ValueError("effect_size must be non-negative")
    informative = sorted(set(int(f) for f in informative_features))
    if any(not 0 <= f < N_FEATURES for f in informative):
        raise ValueError("informative feature index out of range")
    rng = np.random.default_rng(seed)
    n_sub = 2 * n_subjects_per_class
    labels = np.repeat([1, 0], n_subjects_per_class)
    shift = np.zeros(N_FEATURES)
    shift[informative] = effect_size
    subject_effect = rng.normal(0.0, subject_sd, size=(n_sub, N_FEATURES))
    noise = rng.normal(0.0, 1.0, size=(n_sub, n_recordings, N_FEATURES))
    X = labels[:, None, None] * shift + subject_effect[:, None, :] + noise
    subjects = [f"s{i:03d}" for i in range(n_sub) for _ in range(n_recordings)]
    return Dataset(
        X=X.reshape(n_sub * n_recordings, N_FEATURES),
        y=np.repeat(labels, n_recordings),
        subjects=subjects,
        recording_index=np.tile(np.arange(n_recordings), n_sub),
    )
