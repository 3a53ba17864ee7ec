"""Random-forest preselection and the MICMAC greedy wrapper search.

MICMAC grows a feature set one feature at a time. Each unselected candidate
is scored by its gain in validation accuracy divided by its summed absolute
cosine similarity to the features already selected; the best candidate is
added while its score exceeds the threshold.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from micmac.dataset import Dataset, check_disjoint, fit_scaler
from micmac.learners import LearnerConfig, accuracy, rf_importance, train as train_learner
from micmac.learners.knn import accumulate_sq_dist, vote

TERMINATION_REASONS = ("threshold", "cap", "exhausted")

# cap on the (candidates x val x train) distance block held in memory at once
_KNN_BLOCK_ELEMS = 4_000_000


@dataclass(frozen=True)
class SelectorConfig:
    wrapper: LearnerConfig = field(default_factory=LearnerConfig)
    threshold: float = 0.0
    max_selected: int = 100
    epsilon: float = 1e-6
    preselect_n: int = 100
    forest: LearnerConfig = field(default_factory=lambda: LearnerConfig(kind="rf"))

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.max_selected < 1:
            raise ValueError("max_selected must be >= 1")
        if self.preselect_n < 1:
            raise ValueError("preselect_n must be >= 1")
        if self.wrapper.kind == "rf":
            raise ValueError("the wrapper must be knn or svm")


@dataclass(frozen=True)
class SelectionTrace:
    """Outcome of one MICMAC run.

    ``merits[0]`` is NaN: the first feature is seeded from the preselection
    ranking rather than scored. ``rejected_merit`` is the best score that
    failed the threshold (NaN when the run stopped for another reason).
    """

    features: tuple[str, ...]
    merits: tuple[float, ...]
    phis: tuple[float, ...]
    reason: str
    threshold: float
    rejected_merit: float = math.nan
    train_subjects: tuple[str, ...] = ()
    val_subjects: tuple[str, ...] = ()

    def __post_init__(self):
        if not (len(self.features) == len(self.merits) == len(self.phis)):
            raise ValueError("trace lengths are inconsistent")
        if len(set(self.features)) != len(self.features):
            raise ValueError("trace contains duplicate features")
        if self.reason not in TERMINATION_REASONS:
            raise ValueError(f"unknown termination reason {self.reason!r}")

    def __len__(self):
        return len(self.features)


def preselect_rf(train: Dataset, cfg: SelectorConfig, seed: int | None = None) -> list[str]:
    """Rank features by random-forest importance and keep the top ``cfg.preselect_n``.

    Ties in importance are ordered by feature name. With fewer features than
    ``preselect_n`` every feature is returned, ranked.
    """
    if len(np.unique(train.labels)) < 2:
        raise ValueError("preselection needs both classes in the training rows")
    forest_cfg = cfg.forest if seed is None else cfg.forest.with_seed(seed)
    model = train_learner(forest_cfg, train.values, train.labels)
    imp = rf_importance(model)
    names = train.feature_names
    order = sorted(range(len(names)), key=lambda j: (-imp[j], names[j]))
    return [names[j] for j in order[:cfg.preselect_n]]


def abs_cosine_matrix(Z: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(Z, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    U = Z / safe
    C = np.abs(U.T @ U)
    C[:, norms == 0] = 0.0
    C[norms == 0, :] = 0.0
    return np.minimum(C, 1.0)


class _Phi:
    """Validation accuracy of the wrapper on feature subsets of ``F0``.

    Both folds are standardized with a scaler fitted on the training rows.
    """

    def __init__(self, train: Dataset, val: Dataset, F0: Sequence[str], wrapper: LearnerConfig):
        tr = train.columns(F0)
        va = val.columns(F0)
        scaler = fit_scaler(tr, np.arange(tr.n_samples))
        self.Zt = scaler.transform(tr.values)
        self.Zv = scaler.transform(va.values)
        self.yt = tr.labels
        self.yv = va.labels
        self.wrapper = wrapper
        self.cos = abs_cosine_matrix(self.Zt)

    def phi(self, cols: Sequence[int]) -> float:
        cols = list(cols)
        model = train_learner(self.wrapper, self.Zt[:, cols], self.yt)
        return accuracy(model, self.Zv[:, cols], self.yv)

    def phi_candidates(self, selected: Sequence[int], candidates: Sequence[int]) -> np.ndarray:
        """Accuracy of ``selected + [c]`` for every candidate ``c``."""
        if self.wrapper.kind != "knn":
            return np.array([self.phi(list(selected) + [c]) for c in candidates])
        sel = list(selected)
        base = accumulate_sq_dist(self.Zv[:, sel], self.Zt[:, sel])
        n_val, n_tr = base.shape
        out = np.empty(len(candidates))
        block = max(1, _KNN_BLOCK_ELEMS // (n_val * n_tr))
        cand = np.asarray(candidates, dtype=int)
        for start in range(0, len(cand), block):
            cs = cand[start:start + block]
            diff = self.Zv[:, cs].T[:, :, None] - self.Zt[:, cs].T[:, None, :]
            D = base[None] + diff * diff
            pred = vote(D, self.yt, self.wrapper.knn_k)
            out[start:start + len(cs)] = (pred == self.yv[None, :]).sum(axis=1) / n_val
        return out


def merit_score(gain, redundancy, epsilon: float):
    """``gain / max(redundancy, epsilon)``, elementwise."""
    return np.asarray(gain, dtype=float) / np.maximum(redundancy, epsilon)


def _check_folds(train: Dataset, val: Dataset):
    check_disjoint(np.unique(train.subject_ids), np.unique(val.subject_ids), "selection train/validation")


def merit(candidate: str, selected, train: Dataset, val: Dataset, cfg: SelectorConfig) -> float:
    """Score of adding ``candidate`` to ``selected`` (a trace or a list of names)."""
    sel = list(selected.features if isinstance(selected, SelectionTrace) else selected)
    if not sel:
        raise ValueError("merit needs a non-empty selection")
    if candidate in sel:
        raise ValueError(f"candidate {candidate!r} is already selected")
    _check_folds(train, val)
    F0 = sel + [candidate]
    ev = _Phi(train, val, F0, cfg.wrapper)
    idx = list(range(len(sel)))
    gain = ev.phi(idx + [len(sel)]) - ev.phi(idx)
    return float(merit_score(gain, float(ev.cos[len(sel), idx].sum()), cfg.epsilon))


def micmac_select(train: Dataset, val: Dataset, F0: Sequence[str], cfg: SelectorConfig) -> SelectionTrace:
    """Greedy MICMAC search over ``F0`` seeded with its first (highest-ranked) feature.

    Ties on the merit score go to the larger raw accuracy gain, then to the
    better ``F0`` rank.
    """
    F0 = list(F0)
    if len(F0) < 2:
        raise ValueError("F0 must contain at least 2 features")
    if len(set(F0)) != len(F0):
        raise ValueError("F0 contains duplicate features")
    _check_folds(train, val)
    ev = _Phi(train, val, F0, cfg.wrapper)

    selected = [0]
    in_sel = np.zeros(len(F0), dtype=bool)
    in_sel[0] = True
    phi_cur = ev.phi(selected)
    merits, phis = [math.nan], [phi_cur]
    rejected = math.nan
    while True:
        if len(selected) >= cfg.max_selected:
            reason = "cap"
            break
        cands = np.flatnonzero(~in_sel)
        if len(cands) == 0:
            reason = "exhausted"
            break
        phi_new = ev.phi_candidates(selected, cands)
        gains = phi_new - phi_cur
        mu = merit_score(gains, ev.cos[np.ix_(cands, selected)].sum(axis=1), cfg.epsilon)
        best = np.lexsort((cands, -gains, -mu))[0]
        if not mu[best] > cfg.threshold:
            reason = "threshold"
            rejected = float(mu[best])
            break
        f = int(cands[best])
        selected.append(f)
        in_sel[f] = True
        phi_cur = float(phi_new[best])
        merits.append(float(mu[best]))
        phis.append(phi_cur)

    return SelectionTrace(
        features=tuple(F0[i] for i in selected),
        merits=tuple(merits),
        phis=tuple(phis),
        reason=reason,
        threshold=cfg.threshold,
        rejected_merit=rejected,
        train_subjects=tuple(np.unique(train.subject_ids).tolist()),
        val_subjects=tuple(np.unique(val.subject_ids).tolist()),
    )


def write_trace(trace: SelectionTrace, path) -> None:
    """CSV ``step,feature_name,merit,phi_after,reason``; a final row records the stop."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "feature_name", "merit", "phi_after", "reason"])
        for step, (f, mu, phi) in enumerate(zip(trace.features, trace.merits, trace.phis)):
            w.writerow([step, f, "" if math.isnan(mu) else repr(mu), repr(phi),
                        "seed" if step == 0 else "accepted"])
        rej = "" if math.isnan(trace.rejected_merit) else repr(trace.rejected_merit)
        w.writerow([len(trace), "", rej, "", trace.reason])


def read_trace(path, threshold: float = 0.0) -> SelectionTrace:
    features, merits, phis = [], [], []
    reason, rejected = "exhausted", math.nan
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["feature_name"] == "":
                reason = row["reason"]
                rejected = float(row["merit"]) if row["merit"] else math.nan
                continue
            features.append(row["feature_name"])
            merits.append(float(row["merit"]) if row["merit"] else math.nan)
            phis.append(float(row["phi_after"]))
    return SelectionTrace(tuple(features), tuple(merits), tuple(phis), reason, threshold, rejected)
