"""In-memory dataset model, CSV ingestion, per-fold scaling and cosine redundancy."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

HEADER_PREFIX = ("subject_id", "time_point", "label")


class DatasetError(ValueError):
    """Raised for malformed input files or datasets violating their invariants."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Sample-by-feature matrix with per-sample subject id, time point and label.

    Rows belonging to one subject share a label and every subject contributes
    the same number of rows. Instances are treated as immutable; the row and
    column selectors return new datasets.
    """

    values: np.ndarray
    subject_ids: np.ndarray
    time_points: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    _col: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DatasetError("values must be a 2-d matrix")
        n, p = values.shape
        subject_ids = np.asarray(self.subject_ids).astype(str)
        time_points = np.asarray(self.time_points, dtype=int)
        labels = np.asarray(self.labels, dtype=int)
        names = tuple(str(f) for f in self.feature_names)
        if not (len(subject_ids) == len(time_points) == len(labels) == n):
            raise DatasetError("per-sample arrays must match the number of rows")
        if len(names) != p:
            raise DatasetError("feature_names must match the number of columns")
        if len(set(names)) != p:
            dupes = sorted({f for f in names if names.count(f) > 1})
            raise DatasetError(f"duplicate feature names: {dupes[:5]}")
        if not np.all(np.isfinite(values)):
            r, c = np.argwhere(~np.isfinite(values))[0]
            raise DatasetError(f"non-finite value at row {r}, column {names[c]!r}")
        if not np.isin(labels, (0, 1)).all():
            raise DatasetError("labels must be 0 or 1")
        if n:
            subjects, inverse, counts = np.unique(subject_ids, return_inverse=True, return_counts=True)
            if len(set(counts.tolist())) > 1:
                raise DatasetError(
                    f"subjects have unequal sample counts: {dict(zip(subjects[:5], counts[:5]))}"
                )
            lo = np.full(len(subjects), 2)
            hi = np.full(len(subjects), -1)
            np.minimum.at(lo, inverse, labels)
            np.maximum.at(hi, inverse, labels)
            bad = np.flatnonzero(lo != hi)
            if len(bad):
                raise DatasetError(f"inconsistent label for subject {subjects[bad[0]]!r}")
        for name, arr in (("values", values), ("subject_ids", subject_ids),
                          ("time_points", time_points), ("labels", labels)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "_col", {f: i for i, f in enumerate(names)})

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def subjects(self) -> np.ndarray:
        """Sorted unique subject ids."""
        return np.unique(self.subject_ids)

    def subject_labels(self) -> dict[str, int]:
        out = {}
        for s, y in zip(self.subject_ids, self.labels):
            out.setdefault(str(s), int(y))
        return out

    def column_index(self, names: Iterable[str]) -> np.ndarray:
        try:
            return np.array([self._col[f] for f in names], dtype=int)
        except KeyError as exc:
            raise DatasetError(f"unknown feature {exc.args[0]!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self._col[name]]

    def rows(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(self.values[index], self.subject_ids[index], self.time_points[index],
                       self.labels[index], self.feature_names)

    def subject_rows(self, subjects: Iterable[str]) -> np.ndarray:
        """Row indices (in file order) of the given subjects."""
        return np.flatnonzero(np.isin(self.subject_ids, np.asarray(list(subjects), dtype=str)))

    def for_subjects(self, subjects: Iterable[str]) -> "Dataset":
        return self.rows(self.subject_rows(subjects))

    def columns(self, names: Sequence[str]) -> "Dataset":
        idx = self.column_index(names)
        return Dataset(self.values[:, idx], self.subject_ids, self.time_points, self.labels,
                       tuple(self.feature_names[i] for i in idx))


def load_dataset(path) -> Dataset:
    """Read a dataset CSV (``subject_id,time_point,label,<features...>``)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if tuple(header[:3]) != HEADER_PREFIX:
            raise DatasetError(
                f"{path}: malformed header, expected it to start with {','.join(HEADER_PREFIX)}; got {header[:3]}"
            )
        feature_names = header[3:]
        if not feature_names:
            raise DatasetError(f"{path}: no feature columns")
        width = len(header)
        subjects, times, labels, rows = [], [], [], []
        for rownum, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != width:
                raise DatasetError(f"{path}: row {rownum} has {len(row)} cells, expected {width}")
            subjects.append(row[0].strip())
            try:
                times.append(int(row[1]))
            except ValueError:
                raise DatasetError(f"{path}: row {rownum}, column 'time_point': not an integer: {row[1]!r}") from None
            if row[2].strip() not in ("0", "1"):
                raise DatasetError(f"{path}: row {rownum}, column 'label': expected 0 or 1, got {row[2]!r}")
            labels.append(int(row[2]))
            vals = []
            for j, cell in enumerate(row[3:]):
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path}: row {rownum}, column {feature_names[j]!r}: non-numeric cell {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DatasetError(f"{path}: row {rownum}, column {feature_names[j]!r}: {cell} value")
                vals.append(v)
            rows.append(vals)
    values = np.array(rows, dtype=float).reshape(len(rows), len(feature_names))
    try:
        return Dataset(values, np.array(subjects, dtype=str), np.array(times, dtype=int),
                       np.array(labels, dtype=int), tuple(feature_names))
    except DatasetError as exc:
        raise DatasetError(f"{path}: {exc}") from None


def save_dataset(d: Dataset, path) -> None:
    """Write ``d`` as CSV; floats use their shortest round-trip repr."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(HEADER_PREFIX) + list(d.feature_names))
        for i in range(d.n_samples):
            w.writerow([d.subject_ids[i], int(d.time_points[i]), int(d.labels[i])]
                       + [repr(float(v)) for v in d.values[i]])


@dataclass(frozen=True, eq=False)
class Scaler:
    feature_names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        safe = np.where(self.std > 0, self.std, 1.0)
        out = (X - self.mean) / safe
        out[:, self.std == 0] = 0.0
        return out


def fit_scaler(d: Dataset, sample_ids) -> Scaler:
    """Per-feature mean and population standard deviation over ``sample_ids`` rows."""
    idx = np.asarray(sample_ids, dtype=int)
    if idx.size == 0:
        raise ValueError("cannot fit a scaler on an empty sample set")
    X = d.values[idx]
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # constant columns leave rounding residue in the std
    std[np.all(X == X[0], axis=0)] = 0.0
    return Scaler(d.feature_names, mean, std)


def apply_scaler(s: Scaler, d: Dataset) -> Dataset:
    if tuple(s.feature_names) != tuple(d.feature_names):
        missing = sorted(set(s.feature_names) ^ set(d.feature_names))
        raise DatasetError(f"scaler was fitted on a different feature set (mismatch: {missing[:5]})")
    return Dataset(s.transform(d.values), d.subject_ids, d.time_points, d.labels, d.feature_names)


def cosine_redundancy(x_i, x_k) -> float:
    """Absolute cosine similarity; 0 when either vector has zero norm."""
    a = np.asarray(x_i, dtype=float)
    b = np.asarray(x_k, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("vectors must be non-empty")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(min(1.0, abs(a @ b) / (na * nb)))


class SubjectLeakageError(RuntimeError):
    """A model's training rows and evaluation rows share a subject."""


def check_disjoint(train_subjects, eval_subjects, what: str = "train/evaluation") -> None:
    shared = set(map(str, train_subjects)) & set(map(str, eval_subjects))
    if shared:
        raise SubjectLeakageError(f"{what} sets share subjects: {sorted(shared)[:5]}")
