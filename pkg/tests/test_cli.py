import csv
import time

import pytest

from micmac.cli import main
from micmac.dataset import load_dataset

from oracles import tukey_permutation_p


def run(*argv):
    return main([str(a) for a in argv])


def test_synth_shape_and_determinism(tmp_path, capsys):
    assert run("synth", "--subjects", 60, "--features", 300, "--informative", 12, "--seed", 7, "--out", tmp_path / "a") == 0
    assert "540 samples x 300 features" in capsys.readouterr().out
    assert load_dataset(tmp_path / "a" / "data.csv").values.shape == (540, 300)
    assert run("synth", "--subjects", 60, "--features", 300, "--informative", 12, "--seed", 7, "--out", tmp_path / "b") == 0
    for f in ("data.csv", "ground_truth.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_synth_from_config(tmp_path):
    (tmp_path / "c.ini").write_text("[synth]\nsubjects = 10\nfeatures = 20\ninformative = 2\nseed = 3\n")
    assert run("synth", "--config", tmp_path / "c.ini", "--out", tmp_path) == 0
    assert load_dataset(tmp_path / "data.csv").values.shape == (90, 20)
    (tmp_path / "bad.ini").write_text("[synth]\nfeaturez = 20\n")
    assert run("synth", "--config", tmp_path / "bad.ini", "--out", tmp_path) == 2


def test_synth_missing_features(tmp_path):
    assert run("synth", "--out", tmp_path) == 2


@pytest.mark.parametrize("cmd", ["synth", "crossval", "select", "compare", "report"])
def test_help_exits_zero(cmd):
    with pytest.raises(SystemExit) as e:
        main([cmd, "--help"])
    assert e.value.code == 0


@pytest.mark.parametrize("argv", [["crossval", "--bogus"], ["synth", "--features", "x"], ["nope"], []])
def test_bad_flags_exit_two(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == 2


@pytest.fixture(scope="module")
def data540(tmp_path_factory):
    out = tmp_path_factory.mktemp("d540")
    assert run("synth", "--features", 300, "--seed", 7, "--out", out) == 0
    return out / "data.csv"


def test_unknown_scheme(data540, tmp_path, capsys):
    assert run("crossval", "--data", data540, "--scheme", "micmac:rf:knn", "--out", tmp_path) == 2
    assert "valid schemes" in capsys.readouterr().err


def test_missing_data_file(tmp_path):
    assert run("crossval", "--data", tmp_path / "none.csv", "--out", tmp_path) == 1


def test_smoke_crossval(data540, tmp_path, capsys):
    t0 = time.perf_counter()
    rc = run("crossval", "--data", data540, "--scheme", "micmac:knn:knn", "--repeats", 1, "--outer", 2,
             "--inner", 2, "--out", tmp_path, "--no-png")
    elapsed = time.perf_counter() - t0
    assert rc == 0
    assert elapsed < 60
    out = capsys.readouterr().out
    assert "MICMAC-knnW-knnC" in out
    with open(tmp_path / "report.csv") as fh:
        assert [r["scheme"] for r in csv.DictReader(fh)] == ["MICMAC-knnW-knnC"]
    assert (tmp_path / "run_config.ini").exists()
    # the saved config reproduces the run
    assert run("crossval", "--config", tmp_path / "run_config.ini", "--out", tmp_path / "again", "--no-png") == 0
    assert (tmp_path / "report.csv").read_bytes() == (tmp_path / "again" / "report.csv").read_bytes()


def test_select_trace(data540, tmp_path, capsys):
    assert run("select", "--data", data540, "--outer", 10, "--inner", 9, "--preselect", 20,
               "--trace-out", tmp_path / "t.csv") == 0
    out = capsys.readouterr().out
    assert out.startswith("step,feature_name,merit,phi_after")
    assert "stopped:" in out
    assert (tmp_path / "t.csv").read_text().startswith("step,feature_name,merit,phi_after,reason")
    assert run("select", "--data", data540, "--fold", 12) == 2


def small_report(tmp_path, name, effect, repeats=5):
    d = tmp_path / f"data_{name}"
    assert run("synth", "--subjects", 20, "--features", 30, "--informative", 4, "--effect", effect,
               "--seed", 1, "--out", d) == 0
    out = tmp_path / name
    assert run("crossval", "--data", d / "data.csv", "--scheme", "mrmr:knn", "--repeats", repeats,
               "--outer", 5, "--inner", 3, "--preselect", 15, "--rf-trees", 20, "--k-max", 15,
               "--out", out, "--no-png") == 0
    return out


def read_tukey(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_compare_identical_reports(tmp_path):
    r = small_report(tmp_path, "r", 1.0, repeats=3)
    assert run("compare", r, r, "--out", tmp_path / "t.csv") == 0
    rows = read_tukey(tmp_path / "t.csv")
    assert len(rows) == 1 and float(rows[0]["p"]) == 1.0
    assert list(rows[0]) == ["group_a", "group_b", "q", "p"]


def test_compare_separated_regimes(tmp_path):
    from micmac.report import read_experiments

    a = small_report(tmp_path, "null", 0.0)
    b = small_report(tmp_path, "strong", 2.0)
    assert run("compare", a, b, "--out", tmp_path / "t.csv") == 0
    (row,) = read_tukey(tmp_path / "t.csv")
    assert float(row["p"]) < 0.01
    ga = read_experiments(a / "experiments.csv")["mRMR-knnC"]["best_acc"]
    gb = read_experiments(b / "experiments.csv")["mRMR-knnC"]["best_acc"]
    assert tukey_permutation_p([ga, gb], n_perm=20_000)[(0, 1)] < 0.01


def test_compare_single_report(tmp_path, capsys):
    r = small_report(tmp_path, "one", 1.0, repeats=2)
    assert run("compare", r, "--out", tmp_path / "t.csv") == 1
    assert "need >= 2 groups" in capsys.readouterr().err


def test_report_rerender(tmp_path):
    r = small_report(tmp_path, "rr", 1.0, repeats=2)
    before = (r / "curves.svg").read_bytes()
    assert run("report", r, "--no-png") == 0
    assert (r / "curves.svg").read_bytes() == before
