import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from micmac.crossval import DEFAULT_SCHEMES, ExperimentReport, run_experiments
from micmac.learners import LearnerConfig
from micmac.report import curves_svg, emit_report, read_experiments, read_summary, safe_name
from micmac.selectors import SelectorConfig
from micmac.synth import SynthConfig, generate


@pytest.fixture(scope="module")
def report():
    d, _ = generate(SynthConfig(n_subjects=20, n_features=30, n_informative=4, effect_size=2.0, seed=1))
    cfg = SelectorConfig(preselect_n=12, forest=LearnerConfig(kind="rf", rf_trees=20))
    return run_experiments(d, DEFAULT_SCHEMES, n_repeats=2, cfg=cfg, n_outer=5, n_inner=3, k_max=12)


def snapshot(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def test_emit_files(report, tmp_path):
    emit_report(report, tmp_path)
    names = {p.name for p in tmp_path.iterdir()}
    curves = sorted(n for n in names if n.startswith("curve_") and n.endswith(".csv"))
    assert len(curves) == 8
    assert {"report.csv", "curves.svg", "curves.png", "summary.png", "experiments.csv", "report.json"} <= names
    assert sum(n.startswith("ranking_") for n in names) == 8 * 5
    rows = read_summary(tmp_path / "report.csv")
    assert [r["scheme"] for r in rows] == [s.name for s in DEFAULT_SCHEMES]
    with open(tmp_path / "report.csv") as fh:
        assert fh.readline().strip() == "scheme,best_acc,best_acc_std,best_k,top12_acc,top12_std"
    with open(tmp_path / f"curve_{safe_name('mRMR-knnC')}.csv") as fh:
        assert next(csv.reader(fh)) == ["k", "mean_acc", "std_acc"]
    meta = json.loads((tmp_path / "report.json").read_text())
    flags = {name: m["approximate"] for name, m in meta["schemes"].items()}
    assert flags == {s.name: s.selector == "mdrmr" for s in DEFAULT_SCHEMES}
    exp = read_experiments(tmp_path / "experiments.csv")
    assert set(exp) == set(report.results)
    for name, res in report.results.items():
        assert exp[name]["best_acc"] == pytest.approx(res.experiment_accuracies(res.best_k).tolist(), abs=1e-15)


def test_reemit_is_byte_identical(report, tmp_path):
    emit_report(report, tmp_path)
    first = snapshot(tmp_path)
    emit_report(report, tmp_path)
    assert snapshot(tmp_path) == first


def test_rankings_file(report, tmp_path):
    emit_report(report, tmp_path, figures=False)
    name = "MICMAC-knnW-knnC"
    with open(tmp_path / f"ranking_{name}_fold0.csv") as fh:
        rows = list(csv.DictReader(fh))
    for rep in range(2):
        assert [r["feature_name"] for r in rows if int(r["repeat"]) == rep] == report.results[name].rankings[rep][0]


def test_empty_report_errors(tmp_path):
    with pytest.raises(ValueError, match="no results"):
        emit_report(ExperimentReport({}, 0, 10, 9, 0), tmp_path)
    with pytest.raises(ValueError, match="no results"):
        curves_svg({})


def test_svg_structure(report):
    curves = {n: (r.k_values, r.curve_mean, r.curve_std) for n, r in report.results.items()}
    root = ET.fromstring(curves_svg(curves))
    ns = {"s": "http://www.w3.org/2000/svg"}
    assert root.get("viewBox") == "0 0 800 500"
    lines = root.findall("s:polyline", ns)
    assert len(lines) == 8
    texts = [t.text for t in root.findall("s:text", ns)]
    assert all(name in texts for name in curves)
    for line, (k, mean, _) in zip(lines, curves.values()):
        assert len(line.get("points").split()) == len(k)
