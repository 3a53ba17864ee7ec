"""Synthetic subject-structured datasets with planted discriminative features."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from micmac.dataset import Dataset


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 60
    samples_per_subject: int = 9
    n_features: int = 300
    n_informative: int = 12
    effect_size: float = 1.5
    subject_effect_std: float = 1.0
    n_redundant_copies: int = 1
    rho: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.n_subjects < 2 or self.n_subjects % 2:
            raise ValueError("n_subjects must be an even count >= 2")
        if self.samples_per_subject < 1:
            raise ValueError("samples_per_subject must be >= 1")
        if self.n_informative < 0 or self.n_redundant_copies < 0:
            raise ValueError("feature counts must be non-negative")
        if self.n_informative * (1 + self.n_redundant_copies) > self.n_features:
            raise ValueError("n_informative * (1 + n_redundant_copies) exceeds n_features")
        if self.effect_size < 0:
            raise ValueError("effect_size must be >= 0")
        if self.subject_effect_std < 0:
            raise ValueError("subject_effect_std must be >= 0")
        if not 0 <= self.rho < 1:
            raise ValueError("rho must lie in [0, 1)")


@dataclass(frozen=True)
class GroundTruth:
    informative: tuple[str, ...]
    duplicates: dict  # duplicate feature name -> source feature name

    def role(self, name: str) -> str:
        if name in self.duplicates:
            return f"redundant_of:{self.duplicates[name]}"
        return "informative" if name in self.informative else "noise"

    def source_of(self, name: str) -> str:
        """Map a duplicate to its informative source; other names map to themselves."""
        return self.duplicates.get(name, name)


def generate(cfg: SynthConfig) -> tuple[Dataset, GroundTruth]:
    """Draw a dataset from ``cfg``.

    Every non-duplicate column is ``subject offset + unit noise``, with one
    offset per (subject, feature) shared by all of the subject's samples, so at
    zero effect an informative column is distributed exactly like a noise
    column. Informative columns add a class mean of ``+-effect_size/2``.
    Duplicates are ``rho * z(source) + sqrt(1 - rho^2) * noise`` with ``z`` the
    standardized source, giving correlation ``rho`` with it. Informative and
    duplicate columns sit at random positions.
    """
    rng = np.random.default_rng(cfg.seed)
    n_s, m, p = cfg.n_subjects, cfg.samples_per_subject, cfg.n_features
    n = n_s * m
    width = max(3, len(str(p - 1)))
    names = tuple(f"f{j:0{width}d}" for j in range(p))
    sid_width = max(3, len(str(n_s - 1)))
    subjects = np.array([f"S{i:0{sid_width}d}" for i in range(n_s)])

    subject_labels = np.repeat([0, 1], n_s // 2)
    rng.shuffle(subject_labels)

    subject_ids = np.repeat(subjects, m)
    time_points = np.tile(np.arange(1, m + 1), n_s)
    labels = np.repeat(subject_labels, m)

    X = rng.normal(size=(n, p))
    positions = rng.permutation(p)
    n_inf = cfg.n_informative
    informative = np.sort(positions[:n_inf])
    offsets = rng.normal(0.0, cfg.subject_effect_std, size=(n_s, p))
    X += np.repeat(offsets, m, axis=0)
    X[:, informative] += np.where(labels == 1, 0.5, -0.5)[:, None] * cfg.effect_size

    duplicates = {}
    dup_pos = positions[n_inf:n_inf * (1 + cfg.n_redundant_copies)].reshape(n_inf, cfg.n_redundant_copies)
    scale = np.sqrt(1.0 - cfg.rho ** 2)
    for src, cols in zip(informative, dup_pos):
        for c in cols:
            z = (X[:, src] - X[:, src].mean()) / X[:, src].std()
            X[:, c] = cfg.rho * z + scale * rng.normal(size=n)
            duplicates[names[c]] = names[src]

    d = Dataset(X, subject_ids, time_points, labels, names)
    truth = GroundTruth(tuple(names[j] for j in informative), dict(sorted(duplicates.items())))
    return d, truth


def save_ground_truth(truth: GroundTruth, feature_names, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature_name", "role"])
        for f in feature_names:
            w.writerow([f, truth.role(f)])


def load_ground_truth(path) -> GroundTruth:
    informative, duplicates = [], {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            role = row["role"]
            if role == "informative":
                informative.append(row["feature_name"])
            elif role.startswith("redundant_of:"):
                duplicates[row["feature_name"]] = role.split(":", 1)[1]
    return GroundTruth(tuple(informative), duplicates)
