"""Ordered k-fold splitting, binary metrics and cross-validation scoring."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .classifiers import ClassifierSpec, predict, train

F1_MODES = ("positive", "macro")


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class FoldPlan:
    """Contiguous ``[start, stop)`` test ranges covering ``range(n)`` in order."""

    n: int
    ranges: tuple[tuple[int, int], ...]

    @property
    def k(self) -> int:
        return len(self.ranges)

    def sizes(self) -> list[int]:
        return [b - a for a, b in self.ranges]

    def splits(self):
        """Yield ``(train_idx, test_idx)`` per fold; the training part keeps order."""
        idx = np.arange(self.n)
        for a, b in self.ranges:
            yield np.concatenate([idx[:a], idx[b:]]), idx[a:b]


def kfold_split(n: int, k: int) -> FoldPlan:
    """Order-preserving folds; the first ``n % k`` folds take one extra row."""
    if k < 2:
        raise EvaluationError(f"need at least 2 folds, got {k}")
    if k > n:
        raise EvaluationError(f"cannot split {n} rows into {k} folds")
    base, extra = divmod(n, k)
    ranges, start = [], 0
    for i in range(k):
        stop = start + base + (1 if i < extra else 0)
        ranges.append((start, stop))
        start = stop
    return FoldPlan(n, tuple(ranges))


def _check_pair(pred, truth):
    pred = np.asarray(pred, dtype=int)
    truth = np.asarray(truth, dtype=int)
    if pred.shape != truth.shape:
        raise EvaluationError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise EvaluationError("empty label sequences")
    return pred, truth


def confusion_matrix(pred, truth) -> dict[str, int]:
    pred, truth = _check_pair(pred, truth)
    return {
        "tn": int(np.sum((pred == 0) & (truth == 0))),
        "fp": int(np.sum((pred == 1) & (truth == 0))),
        "fn": int(np.sum((pred == 0) & (truth == 1))),
        "tp": int(np.sum((pred == 1) & (truth == 1))),
    }


def accuracy(pred, truth) -> float:
    pred, truth = _check_pair(pred, truth)
    return float(np.mean(pred == truth))


def _f1_from_counts(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2 * tp / denom


def f1(pred, truth, mode: str = "positive") -> float:
    """F1 of class 1 (``positive``) or the unweighted mean over both classes (``macro``)."""
    if mode not in F1_MODES:
        raise ValueError(f"mode must be one of {F1_MODES}")
    c = confusion_matrix(pred, truth)
    pos = _f1_from_counts(c["tp"], c["fp"], c["fn"])
    if mode == "positive":
        return pos
    neg = _f1_from_counts(c["tn"], c["fn"], c["fp"])
    return (pos + neg) / 2


@dataclass(frozen=True)
class FoldResult:
    fold: int
    test_range: tuple[int, int]
    accuracy: float
    f1: float
    f1_macro: float
    confusion: dict

    def to_dict(self) -> dict:
        return {
            "fold": self.fold,
            "test_range": list(self.test_range),
            "accuracy": self.accuracy,
            "f1": self.f1,
            "f1_macro": self.f1_macro,
            "confusion": dict(self.confusion),
        }


@dataclass(frozen=True)
class CVResult:
    folds: tuple[FoldResult, ...]
    f1_mode: str = "positive"

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean([f.accuracy for f in self.folds]))

    @property
    def mean_f1(self) -> float:
        attr = "f1" if self.f1_mode == "positive" else "f1_macro"
        return float(np.mean([getattr(f, attr) for f in self.folds]))

    @property
    def mean_f1_positive(self) -> float:
        return float(np.mean([f.f1 for f in self.folds]))

    @property
    def mean_f1_macro(self) -> float:
        return float(np.mean([f.f1_macro for f in self.folds]))

    @property
    def confusion(self) -> dict[str, int]:
        total = {"tn": 0, "fp": 0, "fn": 0, "tp": 0}
        for f in self.folds:
            for key in total:
                total[key] += f.confusion[key]
        return total


def undersample(idx, y, seed: int):
    """Balance the rows ``idx`` by undersampling the majority class; order kept."""
    labels = y[idx]
    pos, neg = idx[labels == 1], idx[labels == 0]
    if len(pos) == 0 or len(neg) == 0 or len(pos) == len(neg):
        return idx
    major, minor = (pos, neg) if len(pos) > len(neg) else (neg, pos)
    chosen = np.random.default_rng(seed).choice(major, size=len(minor), replace=False)
    return np.sort(np.concatenate([minor, chosen]))


def cross_val_score(
    spec: ClassifierSpec,
    X,
    y,
    k: int = 3,
    *,
    f1_mode: str = "positive",
    balance_seed: int | None = None,
    threads: int = 1,
) -> CVResult:
    """Train on the complement of each ordered fold and score on the fold.

    With ``balance_seed`` set, each training part is undersampled to equal
    class counts before fitting (the test fold is left as is).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if f1_mode not in F1_MODES:
        raise ValueError(f"f1_mode must be one of {F1_MODES}")
    plan = kfold_split(len(y), k)

    def run(item):
        i, (tr, te) = item
        if balance_seed is not None:
            tr = undersample(tr, y, balance_seed + i)
        try:
            model = train(spec, X[tr], y[tr])
        except ValueError as exc:
            raise EvaluationError(f"fold {i}: {exc}") from exc
        pred = predict(model, X[te])
        return FoldResult(
            i,
            plan.ranges[i],
            accuracy(pred, y[te]),
            f1(pred, y[te], "positive"),
            f1(pred, y[te], "macro"),
            confusion_matrix(pred, y[te]),
        )

    items = list(enumerate(plan.splits()))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            folds = tuple(pool.map(run, items))
    else:
        folds = tuple(map(run, items))
    return CVResult(folds, f1_mode)
