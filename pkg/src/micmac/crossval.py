"""Subject-based nested cross-validation, frequency re-ranking, majority voting
and repeated experiments."""

from __future__ import annotations

import logging
import time
import warnings
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from micmac.dataset import Dataset, check_disjoint, fit_scaler
from micmac.learners import LearnerConfig, train as train_learner
from micmac.learners.knn import accumulate_sq_dist, vote
from micmac.seeding import derive_seed
from micmac.selectors import (
    MDRMR_APPROXIMATE,
    SelectionTrace,
    SelectorConfig,
    mdrmr_select,
    micmac_select,
    mrmr_select,
    preselect_rf,
)

log = logging.getLogger(__name__)

SELECTORS = ("micmac", "mrmr", "mdrmr")
_SELECTOR_LABEL = {"micmac": "MICMAC", "mrmr": "mRMR", "mdrmr": "MDRMR"}


# ---------------------------------------------------------------- fold plans

@dataclass(frozen=True)
class OuterFold:
    train_val: tuple[str, ...]
    test: tuple[str, ...]
    inner: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]  # (train, validation)


@dataclass(frozen=True)
class FoldPlan:
    outer: tuple[OuterFold, ...]
    seed: int

    @property
    def n_outer(self) -> int:
        return len(self.outer)


def _subject_label_map(subject_ids, labels) -> dict[str, int]:
    out: dict[str, int] = {}
    for s, y in zip(subject_ids, labels):
        out.setdefault(str(s), int(y))
    return out


def make_fold_plan(subject_ids, labels, n_outer: int = 10, n_inner: int = 9, seed: int = 0) -> FoldPlan:
    """Shuffle subjects with ``seed`` and slice them into outer and inner folds.

    ``subject_ids``/``labels`` may be per sample or per subject. When the
    subject count is not divisible by the fold count, fold sizes differ by
    at most one.
    """
    label_of = _subject_label_map(subject_ids, labels)
    subjects = np.array(sorted(label_of))
    if len(subjects) < n_outer:
        raise ValueError(f"{len(subjects)} subjects cannot form {n_outer} outer folds")
    if n_outer < 2 or n_inner < 2:
        raise ValueError("need at least 2 outer and 2 inner folds")
    perm = subjects[np.random.default_rng(seed).permutation(len(subjects))]
    outer_chunks = np.array_split(perm, n_outer)
    folds = []
    for i, test in enumerate(outer_chunks):
        train_val = np.concatenate([c for j, c in enumerate(outer_chunks) if j != i])
        if len(train_val) < n_inner:
            raise ValueError(f"{len(train_val)} training subjects cannot form {n_inner} inner folds")
        inner = []
        for val in np.array_split(train_val, n_inner):
            held = set(val.tolist())
            tr = np.array([s for s in train_val if s not in held])
            if len({label_of[s] for s in tr}) < 2:
                raise ValueError(f"inner training set of outer fold {i} holds a single class")
            inner.append((tuple(tr.tolist()), tuple(val.tolist())))
        if len({label_of[s] for s in train_val}) < 2:
            raise ValueError(f"training set of outer fold {i} holds a single class")
        folds.append(OuterFold(tuple(train_val.tolist()), tuple(test.tolist()), tuple(inner)))
    return FoldPlan(tuple(folds), seed)


# ---------------------------------------------------------------- selection

def _outer_selection(d: Dataset, fold: OuterFold, cfg: SelectorConfig, forest_seed: int):
    tv = d.for_subjects(fold.train_val)
    check_disjoint(fold.train_val, fold.test, "preselection/test")
    F0 = preselect_rf(tv, cfg, seed=forest_seed)
    traces = []
    for tr_subj, val_subj in fold.inner:
        check_disjoint(tr_subj, fold.test, "inner train/outer test")
        check_disjoint(val_subj, fold.test, "inner validation/outer test")
        traces.append(micmac_select(d.for_subjects(tr_subj), d.for_subjects(val_subj), F0, cfg))
    return F0, traces


def run_selection_over_folds(d: Dataset, plan: FoldPlan, cfg: SelectorConfig,
                             seed: int = 0) -> list[list[SelectionTrace]]:
    """Preselect per outer fold, then run MICMAC on every inner fold."""
    return [_outer_selection(d, fold, cfg, derive_seed(seed, o))[1] for o, fold in enumerate(plan.outer)]


def rank_by_frequency(traces: Sequence[SelectionTrace]) -> list[str]:
    """Order selected features by selection count, then mean merit, then name.

    The seeded first feature carries no merit; it sorts ahead of scored
    features with the same count.
    """
    if not traces:
        raise ValueError("need at least one trace")
    counts: Counter = Counter()
    merits = defaultdict(list)
    for t in traces:
        for f, mu in zip(t.features, t.merits):
            counts[f] += 1
            if not np.isnan(mu):
                merits[f].append(mu)

    def key(f):
        mean_mu = float(np.mean(merits[f])) if merits[f] else np.inf
        return (-counts[f], -mean_mu, f)

    return sorted(counts, key=key)


# ---------------------------------------------------------------- classification

def majority_vote(groups: Mapping[str, Sequence[int]]) -> dict[str, int]:
    """Most frequent predicted label per subject; an even split goes to label 1."""
    out = {}
    for subject, preds in groups.items():
        preds = np.asarray(preds, dtype=int)
        if preds.size == 0:
            raise ValueError(f"subject {subject!r} has no predicted samples")
        ones = int(preds.sum())
        out[subject] = 1 if 2 * ones >= preds.size else 0
    return out


def vote_by_subject(predictions, subject_ids) -> dict[str, int]:
    groups = defaultdict(list)
    for s, p in zip(subject_ids, predictions):
        groups[str(s)].append(int(p))
    return majority_vote(groups)


def _confusion(voted: Mapping[str, int], truth: Mapping[str, int]) -> tuple[int, int, int, int]:
    tp = fp = tn = fn = 0
    for s, pred in voted.items():
        y = truth[s]
        if pred == 1:
            tp += y == 1
            fp += y == 0
        else:
            tn += y == 0
            fn += y == 1
    return tp, fp, tn, fn


def fold_curve(d: Dataset, fold: OuterFold, ranking: Sequence[str], classifier: LearnerConfig,
               k_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Subject-level test accuracy and confusion counts for k = 1..min(k_max, len(ranking))."""
    check_disjoint(fold.train_val, fold.test, "classifier train/test")
    K = min(k_max, len(ranking))
    if K < 1:
        raise ValueError("empty ranking")
    cols = list(ranking[:K])
    tr = d.for_subjects(fold.train_val).columns(cols)
    te = d.for_subjects(fold.test).columns(cols)
    scaler = fit_scaler(tr, np.arange(tr.n_samples))
    Zt = scaler.transform(tr.values)
    Zs = scaler.transform(te.values)
    truth = te.subject_labels()
    acc = np.empty(K)
    conf = np.empty((K, 4), dtype=int)
    D = np.zeros((len(Zs), len(Zt)))
    for k in range(1, K + 1):
        if classifier.kind == "knn":
            accumulate_sq_dist(Zs[:, k - 1:k], Zt[:, k - 1:k], out=D)
            pred = vote(D, tr.labels, classifier.knn_k)
        else:
            pred = train_learner(classifier, Zt[:, :k], tr.labels).predict(Zs[:, :k])
        voted = vote_by_subject(pred, te.subject_ids)
        conf[k - 1] = _confusion(voted, truth)
        acc[k - 1] = (conf[k - 1, 0] + conf[k - 1, 2]) / len(voted)
    return acc, conf


def _pad(row: np.ndarray, K: int) -> np.ndarray:
    """Extend a per-k row by repeating its last entry (a fold with fewer ranked
    features keeps using all of them)."""
    if len(row) >= K:
        return row[:K]
    reps = np.repeat(row[-1:], K - len(row), axis=0)
    return np.concatenate([row, reps], axis=0)


@dataclass
class TopKCurve:
    k_values: np.ndarray
    fold_accuracy: np.ndarray  # (n_outer, K)
    fold_confusion: np.ndarray  # (n_outer, K, 4)

    @property
    def mean(self) -> np.ndarray:
        return self.fold_accuracy.mean(axis=0)

    @property
    def std(self) -> np.ndarray:
        return self.fold_accuracy.std(axis=0)


def evaluate_topk_curve(d: Dataset, plan: FoldPlan, rankings: Sequence[Sequence[str]],
                        classifier: LearnerConfig, k_range: Iterable[int] = range(1, 101)) -> TopKCurve:
    """Per outer fold: train on the train/validation subjects with the top-k
    features, majority-vote the test subjects, record subject-level accuracy."""
    ks = np.array(sorted(set(int(k) for k in k_range)))
    if ks.size == 0 or ks[0] < 1:
        raise ValueError("k_range must contain positive counts")
    k_max = int(ks[-1])
    longest = max(len(r) for r in rankings)
    if k_max > longest:
        warnings.warn(f"k up to {k_max} requested but rankings hold at most {longest} features; truncating")
        ks = ks[ks <= longest]
        k_max = longest
    accs, confs = [], []
    for fold, ranking in zip(plan.outer, rankings):
        acc, conf = fold_curve(d, fold, ranking, classifier, k_max)
        accs.append(_pad(acc, k_max)[ks - 1])
        confs.append(_pad(conf, k_max)[ks - 1])
    return TopKCurve(ks, np.array(accs), np.array(confs))


# ---------------------------------------------------------------- experiments

@dataclass(frozen=True)
class Scheme:
    selector: str
    classifier: str
    wrapper: str | None = None

    def __post_init__(self):
        if self.selector not in SELECTORS:
            raise ValueError(f"unknown selector {self.selector!r}")
        if self.classifier not in ("knn", "svm"):
            raise ValueError(f"unknown classifier {self.classifier!r}")
        if self.selector == "micmac" and self.wrapper not in ("knn", "svm"):
            raise ValueError("MICMAC needs a knn or svm wrapper")
        if self.selector != "micmac" and self.wrapper is not None:
            raise ValueError(f"{self.selector} takes no wrapper")

    @property
    def name(self) -> str:
        label = _SELECTOR_LABEL[self.selector]
        if self.wrapper:
            return f"{label}-{self.wrapper}W-{self.classifier}C"
        return f"{label}-{self.classifier}C"

    @property
    def approximate(self) -> bool:
        return self.selector == "mdrmr" and MDRMR_APPROXIMATE

    @classmethod
    def parse(cls, text: str) -> "Scheme":
        """``micmac:<wrapper>:<classifier>``, ``mrmr:<classifier>`` or ``mdrmr:<classifier>``;
        display names such as ``MICMAC-knnW-svmC`` are accepted too."""
        t = text.strip()
        for s in DEFAULT_SCHEMES:
            if t == s.name:
                return s
        parts = [p for p in t.lower().split(":") if p != ""]
        try:
            if parts and parts[0] == "micmac" and len(parts) == 3:
                return cls("micmac", parts[2], parts[1])
            if parts and parts[0] in ("mrmr", "mdrmr") and len(parts) == 2:
                return cls(parts[0], parts[1])
        except ValueError:
            pass
        valid = ", ".join(s.spec for s in DEFAULT_SCHEMES)
        raise ValueError(f"unknown scheme {text!r}; valid schemes: {valid}")

    @property
    def spec(self) -> str:
        if self.wrapper:
            return f"{self.selector}:{self.wrapper}:{self.classifier}"
        return f"{self.selector}:{self.classifier}"


DEFAULT_SCHEMES = (
    Scheme("micmac", "knn", "knn"),
    Scheme("micmac", "svm", "knn"),
    Scheme("micmac", "knn", "svm"),
    Scheme("micmac", "svm", "svm"),
    Scheme("mrmr", "knn"),
    Scheme("mrmr", "svm"),
    Scheme("mdrmr", "knn"),
    Scheme("mdrmr", "svm"),
)


@dataclass
class SchemeResult:
    scheme: Scheme
    accuracy: np.ndarray  # (repeats, outer folds, K) subject-level test accuracy
    confusion: np.ndarray  # (repeats, outer folds, K, 4): tp, fp, tn, fn
    rankings: list  # [repeat][outer fold] -> ranked feature names

    @property
    def name(self) -> str:
        return self.scheme.name

    @property
    def approximate(self) -> bool:
        return self.scheme.approximate

    @property
    def k_values(self) -> np.ndarray:
        return np.arange(1, self.accuracy.shape[-1] + 1)

    @property
    def curve_mean(self) -> np.ndarray:
        return self.accuracy.mean(axis=(0, 1))

    @property
    def curve_std(self) -> np.ndarray:
        return self.accuracy.reshape(-1, self.accuracy.shape[-1]).std(axis=0)

    @property
    def repeat_means(self) -> np.ndarray:
        """(repeats, K): one accuracy per experiment and k."""
        return self.accuracy.mean(axis=1)

    @property
    def best_k(self) -> int:
        return int(np.argmax(self.curve_mean)) + 1

    def at_k(self, k: int) -> tuple[float, float]:
        """Mean and across-experiment std of accuracy using the top ``k`` features."""
        j = min(k, self.accuracy.shape[-1]) - 1
        per_exp = self.repeat_means[:, j]
        return float(self.curve_mean[j]), float(per_exp.std())

    def experiment_accuracies(self, k: int) -> np.ndarray:
        return self.repeat_means[:, min(k, self.accuracy.shape[-1]) - 1]

    def confusion_at(self, k: int) -> np.ndarray:
        return self.confusion[:, :, min(k, self.accuracy.shape[-1]) - 1].sum(axis=(0, 1))


@dataclass
class FoldRecord:
    repeat: int
    fold: int
    train_val: tuple[str, ...]
    test: tuple[str, ...]
    preselected: list[str]
    traces: dict  # wrapper kind -> list of inner SelectionTrace


@dataclass
class ExperimentReport:
    results: dict  # scheme name -> SchemeResult
    n_repeats: int
    n_outer: int
    n_inner: int
    base_seed: int
    records: list = field(default_factory=list, repr=False)
    runtime_s: float = 0.0

    def summary_rows(self) -> list[dict]:
        rows = []
        for name, r in self.results.items():
            best_acc, best_std = r.at_k(r.best_k)
            top12, top12_std = r.at_k(12)
            rows.append(dict(scheme=name, best_acc=best_acc, best_acc_std=best_std, best_k=r.best_k,
                             top12_acc=top12, top12_std=top12_std))
        return rows


_WORKER_DATA: Dataset | None = None


def _init_worker(d: Dataset):
    global _WORKER_DATA
    _WORKER_DATA = d


def _run_fold_job(args):
    d = _WORKER_DATA
    r, o, fold, schemes, cfg, k_max, base_seed = args
    forest_seed = derive_seed(base_seed, r, o)
    tv = d.for_subjects(fold.train_val)
    check_disjoint(fold.train_val, fold.test, "preselection/test")
    F0 = preselect_rf(tv, cfg, seed=forest_seed)
    traces = {}
    rankings = {}
    for s in schemes:
        key = (s.selector, s.wrapper)
        if key in rankings:
            continue
        if s.selector == "micmac":
            wcfg = replace(cfg, wrapper=replace(cfg.wrapper, kind=s.wrapper))
            ts = []
            for tr_subj, val_subj in fold.inner:
                check_disjoint(tr_subj, fold.test, "inner train/outer test")
                check_disjoint(val_subj, fold.test, "inner validation/outer test")
                ts.append(micmac_select(d.for_subjects(tr_subj), d.for_subjects(val_subj), F0, wcfg))
            traces[s.wrapper] = ts
            rankings[key] = rank_by_frequency(ts)
        else:
            select = mrmr_select if s.selector == "mrmr" else mdrmr_select
            rankings[key] = select(tv.columns(F0), len(F0))
    out = {}
    for s in schemes:
        ranking = rankings[(s.selector, s.wrapper)]
        clf = replace(cfg.wrapper, kind=s.classifier)
        acc, conf = fold_curve(d, fold, ranking, clf, k_max)
        out[s.name] = (ranking, acc, conf)
    record = FoldRecord(r, o, fold.train_val, fold.test, F0, traces)
    return r, o, out, record


def run_experiments(d: Dataset, schemes: Sequence[Scheme] = DEFAULT_SCHEMES, n_repeats: int = 10,
                    base_seed: int = 0, cfg: SelectorConfig | None = None, n_outer: int = 10,
                    n_inner: int = 9, k_max: int = 100, jobs: int = 1) -> ExperimentReport:
    """Repeat the full pipeline ``n_repeats`` times with fold plans seeded
    ``base_seed, base_seed + 1, ...`` and aggregate per scheme.

    Jobs are (repeat, outer fold) pairs; results are reduced in index order so
    any ``jobs`` value yields the same report.
    """
    if not schemes:
        raise ValueError("no schemes requested")
    names = [s.name for s in schemes]
    if len(set(names)) != len(names):
        raise ValueError("duplicate schemes")
    cfg = cfg or SelectorConfig()
    t0 = time.perf_counter()
    tasks = []
    for r in range(n_repeats):
        plan = make_fold_plan(d.subject_ids, d.labels, n_outer, n_inner, seed=base_seed + r)
        for o, fold in enumerate(plan.outer):
            tasks.append((r, o, fold, tuple(schemes), cfg, k_max, base_seed))

    if jobs <= 1:
        _init_worker(d)
        results = [_run_fold_job(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(d,)) as pool:
            results = list(pool.map(_run_fold_job, tasks))
    results.sort(key=lambda x: (x[0], x[1]))

    report_results = {}
    for s in schemes:
        per = [[None] * n_outer for _ in range(n_repeats)]
        for r, o, out, _ in results:
            per[r][o] = out[s.name]
        K = max(len(acc) for row in per for (_, acc, _) in row)
        if any(len(acc) < K for row in per for (_, acc, _) in row):
            log.info("%s: rankings shorter than %d reuse all their features for larger k", s.name, K)
        accuracy = np.array([[_pad(acc, K) for (_, acc, _) in row] for row in per])
        confusion = np.array([[_pad(conf, K) for (_, _, conf) in row] for row in per])
        rankings = [[list(rk) for (rk, _, _) in row] for row in per]
        report_results[s.name] = SchemeResult(s, accuracy, confusion, rankings)
    records = [rec for *_, rec in results]
    return ExperimentReport(report_results, n_repeats, n_outer, n_inner, base_seed, records,
                            runtime_s=time.perf_counter() - t0)
