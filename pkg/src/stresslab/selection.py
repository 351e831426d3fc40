"""Ridge correlation screening and wrapper feature selection."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classifiers import ClassifierSpec, decision_weights, predict, train
from .evaluation import accuracy, cross_val_score, kfold_split, undersample
from .features import FEATURE_NAMES

DIRECTIONS = ("forward", "backward")
SCORE_TOL = 1e-12


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class ScreenEntry:
    name: str
    coefficient: float
    abs_coefficient: float
    in_band: bool


@dataclass(frozen=True)
class ScreenReport:
    entries: tuple[ScreenEntry, ...]
    lam: float
    lower: float
    upper: float

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "lower": self.lower,
            "upper": self.upper,
            "features": [
                {
                    "name": e.name,
                    "coefficient": e.coefficient,
                    "abs_coefficient": e.abs_coefficient,
                    "in_band": e.in_band,
                }
                for e in self.entries
            ],
        }


def ridge_screen(X, y, lam: float = 1.0, lower: float = 0.2, upper: float = 2.0,
                 names=None) -> ScreenReport:
    """Univariate ridge coefficient of each standardized column against ``y``.

    ``b = (x . y) / (x . x + lam)``; constant columns get 0.  The report only
    flags features outside ``[lower, upper]``; nothing is removed.
    """
    if y is None:
        raise SelectionError("ridge screening needs labels")
    if lam <= 0:
        raise ValueError("lam must be positive")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    names = tuple(names) if names is not None else FEATURE_NAMES[: X.shape[1]]
    entries = []
    for j in range(X.shape[1]):
        col = X[:, j]
        sd = col.std()
        if sd == 0:
            b = 0.0
        else:
            z = (col - col.mean()) / sd
            b = float(z @ y / (z @ z + lam))
        entries.append(ScreenEntry(names[j], b, abs(b), lower <= abs(b) <= upper))
    return ScreenReport(tuple(entries), lam, lower, upper)


@dataclass(frozen=True)
class FeatureSubset:
    indices: tuple[int, ...]
    score: float
    names: tuple[str, ...] = ()
    history: tuple[dict, ...] = field(default=())

    def __post_init__(self):
        idx = self.indices
        if not idx or any(b <= a for a, b in zip(idx, idx[1:])) or idx[0] < 0:
            raise SelectionError(f"indices must be non-empty and strictly increasing: {idx}")

    def to_dict(self) -> dict:
        return {
            "indices": list(self.indices),
            "names": list(self.names),
            "score": self.score,
            "history": [dict(h) for h in self.history],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureSubset":
        return cls(
            tuple(int(i) for i in doc["indices"]),
            float(doc.get("score", float("nan"))),
            tuple(doc.get("names", ())),
            tuple(doc.get("history", ())),
        )


def _names(names, d):
    return tuple(names) if names is not None else FEATURE_NAMES[:d]


def _argmax_lowest(scores: list[float]) -> int:
    best = max(scores)
    return next(i for i, s in enumerate(scores) if s >= best - SCORE_TOL)


def sequential_select(
    X,
    y,
    spec: ClassifierSpec,
    k_target: int = 5,
    direction: str = "forward",
    folds: int = 3,
    *,
    names=None,
    balance_seed: int | None = None,
    threads: int = 1,
) -> FeatureSubset:
    """Greedy forward addition or backward removal scored by ordered k-fold accuracy.

    Each step takes the candidate with the best mean accuracy; ties go to the
    lowest feature index.  Stops at exactly ``k_target`` features.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    d = X.shape[1]
    if not 1 <= k_target <= d:
        raise SelectionError(f"k_target must lie in [1, {d}], got {k_target}")
    if direction not in DIRECTIONS:
        raise SelectionError(f"direction must be one of {DIRECTIONS}")
    if folds < 2:
        raise SelectionError("need at least 2 folds")
    names = _names(names, d)

    def score(cols) -> float:
        return cross_val_score(spec, X[:, cols], y, folds, balance_seed=balance_seed).mean_accuracy

    def evaluate(subsets):
        if threads > 1 and len(subsets) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return list(pool.map(score, subsets))
        return [score(s) for s in subsets]

    history = []
    if k_target == d:
        current = list(range(d))
        best_score = score(current)
        history.append({"size": d, "score": best_score})
    elif direction == "forward":
        current = []
        while len(current) < k_target:
            candidates = [j for j in range(d) if j not in current]
            scores = evaluate([sorted(current + [j]) for j in candidates])
            pick = _argmax_lowest(scores)
            current = sorted(current + [candidates[pick]])
            best_score = scores[pick]
            history.append({"size": len(current), "score": best_score,
                            "added": candidates[pick]})
    else:
        current = list(range(d))
        while len(current) > k_target:
            scores = evaluate([[c for c in current if c != j] for j in current])
            pick = _argmax_lowest(scores)
            removed = current[pick]
            current = [c for c in current if c != removed]
            best_score = scores[pick]
            history.append({"size": len(current), "score": best_score, "removed": removed})
    return FeatureSubset(tuple(current), float(best_score),
                         tuple(names[i] for i in current), tuple(history))


def rfecv_select(
    X,
    y,
    spec: ClassifierSpec,
    k_min: int = 5,
    folds: int = 3,
    *,
    names=None,
    balance_seed: int | None = None,
) -> FeatureSubset:
    """Recursive elimination of the feature with the smallest mean |weight|.

    Every subset size from the full set down to ``k_min`` is scored by ordered
    k-fold accuracy; the smallest subset reaching the best score wins.
    """
    if not spec.has_linear_weights:
        raise SelectionError(f"{spec.family} exposes no per-feature weights")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    d = X.shape[1]
    if not 1 <= k_min <= d:
        raise SelectionError(f"k_min must lie in [1, {d}], got {k_min}")
    names = _names(names, d)
    plan = kfold_split(len(y), folds)

    current = list(range(d))
    visited = []  # (subset, score)
    while True:
        accs, weights = [], []
        for i, (tr, te) in enumerate(plan.splits()):
            if balance_seed is not None:
                tr = undersample(tr, y, balance_seed + i)
            model = train(spec, X[np.ix_(tr, current)], y[tr])
            accs.append(accuracy(predict(model, X[np.ix_(te, current)]), y[te]))
            weights.append(decision_weights(model))
        visited.append((list(current), float(np.mean(accs))))
        if len(current) == k_min:
            break
        mean_w = np.mean(weights, axis=0)
        current.pop(int(np.argmin(mean_w)))

    best = max(s for _, s in visited)
    # visited runs from most to fewest features; take the last one at the best score
    subset, score = [(c, s) for c, s in visited if s >= best - SCORE_TOL][-1]
    history = tuple({"size": len(c), "score": s} for c, s in visited)
    return FeatureSubset(tuple(subset), score, tuple(names[i] for i in subset), history)
