import json

import numpy as np
import pytest

from stresslab.classifiers import ClassifierSpec
from stresslab.evaluation import cross_val_score
from stresslab.selection import (
    FeatureSubset,
    SelectionError,
    rfecv_select,
    ridge_screen,
    sequential_select,
)

NB = ClassifierSpec("gaussian_nb")
SVC = ClassifierSpec("linear_svc", {"max_iter": 300})


def planted(rng, n=90, d=5, col=0):
    X = rng.uniform(size=(n, d))
    y = (X[:, col] > 0.5).astype(int)
    return X, y


def test_ridge_constant_feature():
    X = np.column_stack([np.ones(8), np.arange(8.0)])
    y = np.array([0, 1] * 4)
    rep = ridge_screen(X, y, names=["const", "ramp"])
    assert rep.entries[0].coefficient == 0.0
    assert rep.entries[0].in_band is False


def test_ridge_label_copy_closed_form():
    y = np.array([0, 1, 0, 1])
    # standardized x = +/-1: x.y = 2, x.x = 4
    for lam, want in [(1e-12, 0.5), (1.0, 2 / 5)]:
        rep = ridge_screen(y[:, None].astype(float), y, lam=lam, names=["y"])
        assert rep.entries[0].coefficient == pytest.approx(want, rel=1e-9)


def test_ridge_band_flags():
    y = np.array([0, 1] * 10)
    rng = np.random.default_rng(0)
    X = np.column_stack([y + 0.01 * rng.normal(size=20), rng.normal(size=20)])
    rep = ridge_screen(X, y, lam=1.0, lower=0.2, upper=2.0, names=["a", "b"])
    for e in rep.entries:
        assert e.in_band == (0.2 <= e.abs_coefficient <= 2.0)
    assert rep.to_dict()["lower"] == 0.2 and rep.to_dict()["upper"] == 2.0


def test_ridge_needs_labels():
    with pytest.raises(SelectionError):
        ridge_screen(np.zeros((3, 2)), None)


def test_forward_all_features(rng):
    X, y = planted(rng, d=4)
    sub = sequential_select(X, y, NB, k_target=4, folds=3)
    assert sub.indices == (0, 1, 2, 3)


def test_forward_first_pick_is_planted_feature(rng):
    X, y = planted(rng, d=5, col=3)
    sub = sequential_select(X, y, NB, k_target=1, folds=3)
    assert sub.indices == (3,)


def test_forward_k1_is_enumerated_argmax(rng):
    X = rng.normal(size=(60, 6))
    y = (X[:, 2] + X[:, 4] + rng.normal(size=60) > 0).astype(int)
    scores = [cross_val_score(NB, X[:, [j]], y, 3).mean_accuracy for j in range(6)]
    best = max(scores)
    want = min(j for j, s in enumerate(scores) if s == best)
    sub = sequential_select(X, y, NB, k_target=1, folds=3)
    assert sub.indices == (want,)
    assert sub.score == best


def test_backward_reaches_target(rng):
    X, y = planted(rng, d=5, col=1)
    sub = sequential_select(X, y, NB, k_target=2, direction="backward", folds=3)
    assert len(sub.indices) == 2 and 1 in sub.indices
    assert [h["size"] for h in sub.history] == [4, 3, 2]


def test_selectors_deterministic_and_threads_agree(rng):
    X, y = planted(rng, d=5)
    a = sequential_select(X, y, SVC, k_target=2, folds=3, threads=1)
    b = sequential_select(X, y, SVC, k_target=2, folds=3, threads=4)
    assert a == b


def test_constant_column_never_chosen_over_ties(rng):
    X, y = planted(rng, d=4, col=2)
    base = sequential_select(X, y, NB, k_target=2, folds=3)
    with_const = sequential_select(np.column_stack([X, np.full(len(y), 0.5)]), y, NB,
                                   k_target=2, folds=3)
    assert with_const.indices == base.indices


@pytest.mark.parametrize("k", [0, 6])
def test_k_target_range(rng, k):
    X, y = planted(rng, d=5)
    with pytest.raises(SelectionError):
        sequential_select(X, y, NB, k_target=k)


def test_rfecv_keeps_informative_feature(rng):
    X, y = planted(rng, n=120, d=6, col=4)
    sub = rfecv_select(X, y, SVC, k_min=1, folds=3)
    assert 4 in sub.indices
    assert [h["size"] for h in sub.history] == [6, 5, 4, 3, 2, 1]


def test_rfecv_identity_when_k_min_is_width(rng):
    X, y = planted(rng, d=4)
    assert rfecv_select(X, y, SVC, k_min=4).indices == (0, 1, 2, 3)


def test_rfecv_needs_linear_weights(rng):
    X, y = planted(rng, d=4)
    with pytest.raises(SelectionError):
        rfecv_select(X, y, NB, k_min=2)


def test_rfecv_prefers_smallest_best_subset(rng):
    X, y = planted(rng, n=120, d=6, col=0)
    sub = rfecv_select(X, y, SVC, k_min=1)
    best = max(h["score"] for h in sub.history)
    smallest = min(h["size"] for h in sub.history if h["score"] == best)
    assert len(sub.indices) == smallest
    assert sub.score == best


def test_subset_json_shape(rng):
    X, y = planted(rng, d=4)
    sub = sequential_select(X, y, NB, k_target=2, names=["a", "b", "c", "d"])
    doc = json.loads(json.dumps(sub.to_dict()))
    assert set(doc) == {"indices", "names", "score", "history"}
    assert doc["names"] == [["a", "b", "c", "d"][i] for i in doc["indices"]]
    assert all({"size", "score"} <= set(h) for h in doc["history"])
    assert FeatureSubset.from_dict(doc).indices == sub.indices


def test_subset_indices_validated():
    with pytest.raises(SelectionError):
        FeatureSubset((2, 1), 0.5)
    with pytest.raises(SelectionError):
        FeatureSubset((), 0.5)
