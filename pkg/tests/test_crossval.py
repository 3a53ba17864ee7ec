import math
import warnings

import numpy as np
import pytest

from micmac.crossval import (
    DEFAULT_SCHEMES,
    Scheme,
    evaluate_topk_curve,
    make_fold_plan,
    majority_vote,
    rank_by_frequency,
    run_experiments,
    run_selection_over_folds,
)
from micmac.learners import LearnerConfig
from micmac.selectors import SelectionTrace, SelectorConfig, mrmr_select
from micmac.synth import SynthConfig, generate

SMALL_CFG = SelectorConfig(preselect_n=10, forest=LearnerConfig(kind="rf", rf_trees=20))


def subjects_labels(n):
    subs = [f"s{i:03d}" for i in range(n)]
    return subs, [i % 2 for i in range(n)]


def trace(features, merits):
    return SelectionTrace(tuple(features), tuple(merits), tuple(0.5 for _ in features), "threshold", 0.0)


# ---------------------------------------------------------------- fold plans

def test_fold_sizes_for_60_subjects():
    subs, labels = subjects_labels(60)
    plan = make_fold_plan(subs, labels, seed=4)
    assert plan.n_outer == 10
    tests = [s for f in plan.outer for s in f.test]
    assert sorted(tests) == sorted(subs)
    for f in plan.outer:
        assert len(f.test) == 6 and len(f.train_val) == 54
        assert not set(f.test) & set(f.train_val)
        assert len(f.inner) == 9
        vals = [s for _, v in f.inner for s in v]
        assert sorted(vals) == sorted(f.train_val)
        for tr, va in f.inner:
            assert len(tr) == 48 and len(va) == 6
            assert not set(tr) & set(va)
            assert not set(tr) & set(f.test)


def test_fold_plan_small_and_deterministic():
    subs, labels = subjects_labels(20)
    plan = make_fold_plan(subs, labels, n_outer=10, n_inner=3, seed=1)
    assert all(len(f.test) == 2 for f in plan.outer)
    assert plan == make_fold_plan(subs, labels, n_outer=10, n_inner=3, seed=1)
    assert plan != make_fold_plan(subs, labels, n_outer=10, n_inner=3, seed=2)


def test_fold_plan_uneven_counts():
    subs, labels = subjects_labels(23)
    sizes = sorted(len(f.test) for f in make_fold_plan(subs, labels, n_outer=5, n_inner=3).outer)
    assert sizes == [4, 4, 5, 5, 5]


def test_fold_plan_errors():
    subs, labels = subjects_labels(6)
    with pytest.raises(ValueError, match="cannot form"):
        make_fold_plan(subs, labels, n_outer=10)
    with pytest.raises(ValueError, match="single class"):
        make_fold_plan(subs, [0] * 6, n_outer=3, n_inner=2)


# ---------------------------------------------------------------- re-ranking and voting

def test_rank_by_count():
    ts = [trace(["f7", "f3"], [math.nan, 0.2])] * 5 + [trace(["f7"], [math.nan])] * 4
    assert rank_by_frequency(ts) == ["f7", "f3"]


def test_rank_ties_by_merit_then_name():
    ts = [trace(["a", "low", "high"], [math.nan, 0.1, 0.4]), trace(["a", "zz", "b"], [math.nan, 0.4, 0.1])]
    assert rank_by_frequency(ts) == ["a", "high", "zz", "b", "low"]


def test_single_trace_keeps_its_order():
    t = trace(["q", "b", "x", "a"], [math.nan, 0.9, 0.5, 0.1])
    assert rank_by_frequency([t]) == ["q", "b", "x", "a"]
    with pytest.raises(ValueError):
        rank_by_frequency([])


def test_majority_vote_examples():
    assert majority_vote({"s": [1, 1, 1, 1, 1, 0, 0, 0, 0]}) == {"s": 1}
    assert majority_vote({"s": [0] * 9}) == {"s": 0}
    assert majority_vote({"s": [0, 1]}) == {"s": 1}
    with pytest.raises(ValueError, match="no predicted samples"):
        majority_vote({"s": []})


# ---------------------------------------------------------------- selection over folds

@pytest.fixture(scope="module")
def sixty():
    return generate(SynthConfig(n_features=20, n_informative=4, seed=2))


def test_selection_over_folds(sixty):
    d, _ = sixty
    plan = make_fold_plan(d.subject_ids, d.labels, seed=0)
    per_fold = run_selection_over_folds(d, plan, SMALL_CFG, seed=0)
    assert len(per_fold) == 10 and sum(len(ts) for ts in per_fold) == 90
    for fold, ts in zip(plan.outer, per_fold):
        for t, (tr, va) in zip(ts, fold.inner):
            assert set(t.train_subjects) == set(tr) and set(t.val_subjects) == set(va)
            assert not set(t.train_subjects + t.val_subjects) & set(fold.test)
    # every trace stays inside its outer fold's preselected set
    from micmac.selectors import preselect_rf
    from micmac.seeding import derive_seed

    for o, (fold, ts) in enumerate(zip(plan.outer, per_fold)):
        F0 = set(preselect_rf(d.for_subjects(fold.train_val), SMALL_CFG, seed=derive_seed(0, o)))
        assert all(set(t.features) <= F0 for t in ts)


# ---------------------------------------------------------------- top-k curves

def test_curve_values_are_sixths(sixty):
    d, _ = sixty
    plan = make_fold_plan(d.subject_ids, d.labels, seed=1)
    rankings = [mrmr_select(d.for_subjects(f.train_val), 20) for f in plan.outer]
    for kind in ("knn", "svm"):
        c = evaluate_topk_curve(d, plan, rankings, LearnerConfig(kind=kind), range(1, 21))
        assert c.fold_accuracy.shape == (10, 20)
        assert np.allclose(c.fold_accuracy * 6, np.round(c.fold_accuracy * 6))
        tp, fp, tn, fn = np.moveaxis(c.fold_confusion, -1, 0)
        assert np.all(tp + fp + tn + fn == 6)
        assert np.array_equal((tp + tn) / 6, c.fold_accuracy)


def test_curve_truncates_with_warning(sixty):
    d, _ = sixty
    plan = make_fold_plan(d.subject_ids, d.labels, seed=1)
    rankings = [list(d.feature_names[:5])] * 10
    with pytest.warns(UserWarning, match="truncating"):
        c = evaluate_topk_curve(d, plan, rankings, LearnerConfig(), range(1, 9))
    assert c.k_values.tolist() == [1, 2, 3, 4, 5]


def test_full_ranking_equals_plain_classification(sixty):
    from micmac.crossval import vote_by_subject
    from micmac.dataset import fit_scaler
    from micmac.learners import predict, train

    d, _ = sixty
    plan = make_fold_plan(d.subject_ids, d.labels, seed=3)
    fold = plan.outer[0]
    ranking = list(d.feature_names)
    c = evaluate_topk_curve(d, plan, [ranking] * 10, LearnerConfig(), [20])
    tr, te = d.for_subjects(fold.train_val), d.for_subjects(fold.test)
    s = fit_scaler(tr, np.arange(tr.n_samples))
    pred = predict(train(LearnerConfig(), s.transform(tr.values), tr.labels), s.transform(te.values))
    voted = vote_by_subject(pred, te.subject_ids)
    truth = te.subject_labels()
    assert c.fold_accuracy[0, 0] == sum(voted[k] == truth[k] for k in voted) / 6


# ---------------------------------------------------------------- experiments

@pytest.fixture(scope="module")
def small_data():
    return generate(SynthConfig(n_subjects=20, n_features=30, n_informative=4, effect_size=2.0, seed=5))[0]


def run_small(d, **kw):
    kw.setdefault("schemes", DEFAULT_SCHEMES)
    return run_experiments(d, cfg=SMALL_CFG, n_outer=5, n_inner=3, k_max=10, **kw)


def test_experiment_report_shape(small_data):
    r = run_small(small_data, n_repeats=2)
    assert list(r.results) == [s.name for s in DEFAULT_SCHEMES]
    for name, res in r.results.items():
        # MICMAC rankings may stop short of k_max; filter rankings cover all 10
        assert res.accuracy.shape[:2] == (2, 5) and 1 <= res.accuracy.shape[2] <= 10
        if not name.startswith("MICMAC"):
            assert res.accuracy.shape[2] == 10
        assert np.all((res.accuracy >= 0) & (res.accuracy <= 1))
        assert np.all(res.curve_std >= 0)
    row = {x["scheme"]: x for x in r.summary_rows()}["MICMAC-knnW-knnC"]
    assert set(row) == {"scheme", "best_acc", "best_acc_std", "best_k", "top12_acc", "top12_std"}
    assert r.results["MDRMR-knnC"].approximate and not r.results["mRMR-knnC"].approximate


def test_single_repeat_has_zero_std(small_data):
    r = run_small(small_data, n_repeats=1, schemes=[Scheme.parse("mrmr:knn")])
    row = r.summary_rows()[0]
    assert row["best_acc_std"] == 0.0 and row["top12_std"] == 0.0


def test_same_seed_same_report(small_data):
    s = [Scheme.parse("micmac:knn:knn"), Scheme.parse("mdrmr:svm")]
    a = run_small(small_data, n_repeats=2, base_seed=3, schemes=s)
    b = run_small(small_data, n_repeats=2, base_seed=3, schemes=s)
    assert a.summary_rows() == b.summary_rows()
    for name in a.results:
        assert a.results[name].accuracy.tobytes() == b.results[name].accuracy.tobytes()
        assert a.results[name].rankings == b.results[name].rankings


def test_mean_matches_independent_sum(small_data):
    r = run_small(small_data, n_repeats=2, schemes=[Scheme.parse("micmac:knn:svm")])
    res = next(iter(r.results.values()))
    for k in range(res.accuracy.shape[2]):
        vals = [float(res.accuracy[i, j, k]) for i in range(2) for j in range(5)]
        total = 0.0
        for v in vals:
            total += v
        assert abs(total / len(vals) - res.curve_mean[k]) <= 1e-12
        exps = [sum(float(res.accuracy[i, j, k]) for j in range(5)) / 5 for i in range(2)]
        m = sum(exps) / 2
        assert abs(math.sqrt(sum((e - m) ** 2 for e in exps) / 2) - res.at_k(k + 1)[1]) <= 1e-12


def test_scheme_parsing():
    assert Scheme.parse("micmac:svm:knn").name == "MICMAC-svmW-knnC"
    assert Scheme.parse("MDRMR-svmC") == Scheme("mdrmr", "svm")
    for bad in ("micmac:knn", "foo:knn", "mrmr:rf", ""):
        with pytest.raises(ValueError, match="valid schemes"):
            Scheme.parse(bad)
