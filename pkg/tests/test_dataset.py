import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from micmac.dataset import (
    DatasetError,
    apply_scaler,
    cosine_redundancy,
    fit_scaler,
    load_dataset,
    save_dataset,
)
from micmac.synth import SynthConfig, generate

from conftest import make_dataset


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_round_trip(tmp_path):
    d, _ = generate(SynthConfig(n_subjects=4, n_features=5, n_informative=1, seed=1))
    save_dataset(d, tmp_path / "d.csv")
    back = load_dataset(tmp_path / "d.csv")
    assert back.feature_names == d.feature_names
    np.testing.assert_array_equal(back.values, d.values)
    np.testing.assert_array_equal(back.subject_ids, d.subject_ids)
    np.testing.assert_array_equal(back.labels, d.labels)
    np.testing.assert_array_equal(back.time_points, d.time_points)


def test_round_trip_keeps_12_significant_digits(tmp_path):
    vals = np.array([[1 / 3, math.pi * 1e-7], [2 / 7, -1e12 / 3]])
    d = make_dataset(vals, ["a", "b"], [0, 1])
    save_dataset(d, tmp_path / "d.csv")
    back = load_dataset(tmp_path / "d.csv")
    np.testing.assert_allclose(back.values, vals, rtol=1e-12, atol=0)


def test_full_width_file(tmp_path):
    d, _ = generate(SynthConfig(n_subjects=60, n_features=3828, n_informative=12, seed=0))
    save_dataset(d, tmp_path / "big.csv")
    back = load_dataset(tmp_path / "big.csv")
    assert back.values.shape == (540, 3828)
    assert len(back.subjects) == 60
    assert set(np.unique(back.subject_ids, return_counts=True)[1]) == {9}


def test_no_feature_columns(tmp_path):
    p = write(tmp_path / "x.csv", "subject_id,time_point,label\nS1,1,0\n")
    with pytest.raises(DatasetError, match="no feature columns"):
        load_dataset(p)


def test_inconsistent_label(tmp_path):
    p = write(tmp_path / "x.csv", "subject_id,time_point,label,a\nS1,1,0,1.0\nS1,2,1,2.0\n")
    with pytest.raises(DatasetError, match="inconsistent label"):
        load_dataset(p)


@pytest.mark.parametrize("body,match", [
    ("subject,time_point,label,a\nS1,1,0,1\n", "malformed header"),
    ("subject_id,time_point,label,a\nS1,1,0,abc\n", "row 1, column 'a': non-numeric"),
    ("subject_id,time_point,label,a\nS1,1,0,nan\n", "row 1, column 'a'"),
    ("subject_id,time_point,label,a,b\nS1,1,0,1\n", "row 1 has 4 cells"),
    ("subject_id,time_point,label,a,a\nS1,1,0,1,2\n", "duplicate feature"),
])
def test_malformed_inputs(tmp_path, body, match):
    with pytest.raises(DatasetError, match=match):
        load_dataset(write(tmp_path / "x.csv", body))


def test_unequal_samples_per_subject():
    with pytest.raises(DatasetError, match="unequal sample counts"):
        make_dataset([[1.0], [2.0], [3.0]], ["a", "a", "b"], [0, 0, 1])


def test_zscore_example():
    d = make_dataset([[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]], ["a", "b", "c"], [0, 1, 0])
    z = apply_scaler(fit_scaler(d, [0, 1, 2]), d).values
    np.testing.assert_allclose(z[:, 0], [-1.224744871391589, 0, 1.224744871391589], atol=1e-12)
    np.testing.assert_array_equal(z[:, 1], [0.0, 0.0, 0.0])


def test_scaler_feature_mismatch():
    d1 = make_dataset([[1.0, 2.0], [3.0, 4.0]], ["a", "b"], [0, 1], names=["a", "b"])
    d2 = make_dataset([[1.0, 2.0], [3.0, 4.0]], ["a", "b"], [0, 1], names=["a", "c"])
    with pytest.raises(DatasetError, match="different feature set"):
        apply_scaler(fit_scaler(d1, [0, 1]), d2)


def test_scaler_fitted_on_subset_only():
    d = make_dataset([[0.0], [2.0], [100.0]], ["a", "b", "c"], [0, 1, 0])
    s = fit_scaler(d, [0, 1])
    assert s.mean[0] == 1.0 and s.std[0] == 1.0
    assert apply_scaler(s, d).values[2, 0] == 99.0


@settings(max_examples=50, deadline=None)
@given(arrays(float, (12, 3), elements=st.floats(-1e3, 1e3)))
def test_rescaling_is_idempotent(X):
    d = make_dataset(X, [f"s{i}" for i in range(12)], [0, 1] * 6)
    z = apply_scaler(fit_scaler(d, range(12)), d)
    z2 = apply_scaler(fit_scaler(z, range(12)), z)
    np.testing.assert_allclose(z2.values, z.values, atol=1e-9)
    moving = z.values.std(axis=0) > 0
    np.testing.assert_allclose(z.values.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(z.values.std(axis=0)[moving], 1, atol=1e-9)


@pytest.mark.parametrize("a,b,expected", [
    ([1, 0], [0, 1], 0.0),
    ([1, 1], [3, 3], 1.0),
    ([1, 0], [1, 1], 0.7071067811865476),
    ([0, 0], [1, 1], 0.0),
    ([1, 2], [-2, -4], 1.0),
])
def test_cosine_examples(a, b, expected):
    assert cosine_redundancy(a, b) == pytest.approx(expected, abs=1e-9)


def test_cosine_length_mismatch():
    with pytest.raises(ValueError, match="length mismatch"):
        cosine_redundancy([1, 2], [1, 2, 3])


vec = arrays(float, 6, elements=st.floats(-1e3, 1e3))


@settings(max_examples=200, deadline=None)
@given(vec, vec, st.floats(0.01, 100) | st.floats(-100, -0.01))
def test_cosine_properties(x, y, c):
    v = cosine_redundancy(x, y)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(cosine_redundancy(y, x), abs=1e-12)
    if np.linalg.norm(x) > 1e-3:
        assert cosine_redundancy(x, c * x) == pytest.approx(1.0, abs=1e-9)
