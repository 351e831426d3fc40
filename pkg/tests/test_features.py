import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stresslab.dataset import Dataset, MinuteFrame
from stresslab.features import (
    FEATURE_NAMES,
    FeatureError,
    extract_matrix,
    extract_window_features,
    lf_hf_ratio,
    percentile,
    quartile_deviation,
    read_matrix_csv,
    slope_series,
    write_matrix_csv,
)

import oracles
from conftest import make_frame, make_window, random_window


def test_sixteen_names_in_fixed_order():
    assert len(FEATURE_NAMES) == 16
    assert FEATURE_NAMES[0] == "hr_mean" and FEATURE_NAMES[-1] == "st_slope_p90"


@pytest.mark.parametrize("values, q, expected", [
    ([1, 2, 3, 4], 25, 1.75),
    ([5], 37, 5.0),
    ([1, 2, 3], 100, 3.0),
    ([3, 1, 2], 50, 2.0),
])
def test_percentile_examples(values, q, expected):
    assert percentile(values, q) == pytest.approx(expected, abs=1e-15)


def test_percentile_empty():
    with pytest.raises(FeatureError):
        percentile([], 50)


@settings(max_examples=200, deadline=None)
@given(values=st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30), q=st.floats(0, 100))
def test_percentile_matches_interpolation_oracle(values, q):
    assert percentile(values, q) == pytest.approx(oracles.percentile(values, q), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(values=st.lists(st.floats(-10, 10), min_size=1, max_size=30),
       q1=st.floats(0, 100), q2=st.floats(0, 100))
def test_percentile_monotone_in_q(values, q1, q2):
    lo, hi = sorted((q1, q2))
    assert percentile(values, lo) <= percentile(values, hi) + 1e-12


@pytest.mark.parametrize("values, expected", [
    ([1, 2, 3, 4, 5], 2.0),
    ([0.3] * 7, 0.0),
    ([0, 1], 0.5),
])
def test_quartile_deviation(values, expected):
    assert quartile_deviation(values) == pytest.approx(expected, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(values=st.lists(st.floats(-10, 10), min_size=1, max_size=30))
def test_quartile_deviation_non_negative(values):
    assert quartile_deviation(values) >= 0


def test_slope_series():
    assert np.allclose(slope_series([0.1, 0.2, 0.4]), [0.1, 0.2])
    assert np.all(slope_series([0.3] * 5) == 0)
    assert np.all(slope_series([0.9, 0.7, 0.4, 0.1]) < 0)
    with pytest.raises(FeatureError):
        slope_series([0.2])


def test_lf_hf_ratio():
    assert lf_hf_ratio(0.4, 0.2, 1e-6) == pytest.approx(2.0)
    assert lf_hf_ratio(0.3, 0.0, 1e-6) == pytest.approx(0.3 / 1e-6)
    assert lf_hf_ratio(0.0, 0.7, 1e-6) == 0.0


def test_constant_window():
    fv = extract_window_features(make_window([make_frame()] * 10))
    assert fv["hr_std"] == 0 and fv["hr_qdev"] == 0
    assert fv["st_slope_max"] == fv["st_slope_mean"] == fv["st_slope_p90"] == 0
    assert fv["hr_mean"] == pytest.approx(0.5)
    assert fv["gsr_mean"] == pytest.approx(0.6)


def test_two_frame_slopes():
    w = make_window([make_frame(skin_temp=0.2), make_frame(skin_temp=0.5)])
    fv = extract_window_features(w)
    for name in ("st_slope_max", "st_slope_mean", "st_slope_p90"):
        assert fv[name] == pytest.approx(0.3, abs=1e-15)


def test_short_window_names_index():
    w = make_window([make_frame()], index=17)
    with pytest.raises(FeatureError, match="17"):
        extract_window_features(w)


def _frames_as_dicts(window):
    return [f.to_json() for f in window.frames]


def test_random_windows_match_naive_oracle(rng):
    for i in range(25):
        w = random_window(rng, 60, i)
        got = extract_window_features(w).values
        want = oracles.window_features(_frames_as_dicts(w))
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


def test_shift_property(rng):
    w = random_window(rng, 30)
    frames = [MinuteFrame(**{**f.__dict__, "heart_rate": f.heart_rate * 0.5}) for f in w.frames]
    shifted = [MinuteFrame(**{**f.__dict__, "heart_rate": f.heart_rate + 0.25}) for f in frames]
    a = extract_window_features(make_window(frames))
    b = extract_window_features(make_window(shifted))
    assert b["hr_mean"] == pytest.approx(a["hr_mean"] + 0.25, abs=1e-12)
    assert b["hr_std"] == pytest.approx(a["hr_std"], abs=1e-12)
    assert b["hr_qdev"] == pytest.approx(a["hr_qdev"], abs=1e-12)


def test_increasing_temperature_has_positive_slopes():
    frames = [make_frame(skin_temp=0.1 + 0.01 * i + 0.001 * i * i) for i in range(20)]
    fv = extract_window_features(make_window(frames))
    assert fv["st_slope_max"] > 0 and fv["st_slope_mean"] > 0 and fv["st_slope_p90"] > 0


def test_extract_matrix_structure(rng):
    windows = tuple(random_window(rng, 5, i, raw_label=i % 2) for i in range(3))
    ds = Dataset(tuple(w.__class__(w.frames, w.raw_label, w.raw_label, w.sequence_index)
                       for w in windows), True)
    m = extract_matrix(ds)
    assert m.X.shape == (3, 16)
    assert list(m.labels) == [0, 1, 0]
    assert list(m.sequence_index) == [0, 1, 2]


def test_extract_matrix_empty():
    m = extract_matrix(Dataset((), True))
    assert m.X.shape == (0, 16)


def test_rows_independent_of_other_windows(rng):
    windows = [random_window(rng, 8, i) for i in range(5)]
    base = extract_matrix(Dataset(tuple(windows), False)).X
    others = [random_window(rng, 8, i) for i in range(5)]
    others[2] = windows[2]
    mixed = extract_matrix(Dataset(tuple(others), False)).X
    assert np.array_equal(base[2], mixed[2])


def test_synthetic_matrix_is_finite(synth_train):
    from stresslab.pipeline import prepare_training
    ds, _ = prepare_training(synth_train, 0.5, 1, 0, balance=False)
    m = extract_matrix(ds)
    assert m.X.shape == (len(synth_train), 16)
    assert np.all(np.isfinite(m.X))


def test_csv_round_trip(tmp_path, rng):
    ds = Dataset(tuple(random_window(rng, 6, i) for i in range(4)), False)
    m = extract_matrix(ds)
    write_matrix_csv(m, tmp_path / "f.csv")
    header = (tmp_path / "f.csv").read_text().splitlines()[0].split(",")
    assert header == list(FEATURE_NAMES) + ["label"]
    back = read_matrix_csv(tmp_path / "f.csv")
    assert np.array_equal(back.X, m.X)
    assert back.labels is None
