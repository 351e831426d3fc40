"""Five binary classifier families behind one ``train``/``predict`` pair.

Labels are ``0``/``1`` throughout.  Every tie resolves toward class 0, except
the linear model whose zero margin maps to class 1.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

FAMILIES = ("linear_svc", "knn", "gaussian_nb", "decision_tree", "random_forest")

DEFAULT_PARAMS: dict[str, dict[str, Any]] = {
    "linear_svc": {"C": 1.0, "max_iter": 2000},
    "knn": {"k": 5},
    "gaussian_nb": {"var_floor": 1e-9},
    "decision_tree": {"min_samples_split": 2, "max_depth": None},
    "random_forest": {
        "n_trees": 100,
        "bootstrap": True,
        "max_features": "sqrt",
        "min_samples_split": 2,
        "max_depth": None,
    },
}

MODEL_FORMAT_VERSION = 1

# relative slack when comparing floating scores that are equal in exact arithmetic
_TIE_TOL = 1e-12


class ClassifierError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ClassifierError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.family])
        if unknown:
            raise ClassifierError(f"unknown {self.family} parameter(s): {sorted(unknown)}")
        merged = {**DEFAULT_PARAMS[self.family], **self.params}
        object.__setattr__(self, "params", merged)
        _validate_params(self.family, merged)
        if self.seed < 0:
            raise ClassifierError("seed must be non-negative")

    @property
    def has_linear_weights(self) -> bool:
        return self.family == "linear_svc"

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params), "seed": self.seed}


def _validate_params(family: str, p: dict) -> None:
    if family == "linear_svc":
        if not p["C"] > 0:
            raise ClassifierError("C must be positive")
        if int(p["max_iter"]) < 1:
            raise ClassifierError("max_iter must be >= 1")
    elif family == "knn":
        k = p["k"]
        if not isinstance(k, int) or k < 1 or k % 2 == 0:
            raise ClassifierError("k must be an odd integer >= 1")
    elif family == "gaussian_nb":
        if not p["var_floor"] > 0:
            raise ClassifierError("var_floor must be positive")
    else:
        if int(p["min_samples_split"]) < 2:
            raise ClassifierError("min_samples_split must be >= 2")
        if p["max_depth"] is not None and int(p["max_depth"]) < 0:
            raise ClassifierError("max_depth must be >= 0 or None")
        if family == "random_forest":
            if int(p["n_trees"]) < 1:
                raise ClassifierError("n_trees must be >= 1")
            mf = p["max_features"]
            if not (mf is None or mf == "sqrt" or (isinstance(mf, int) and mf >= 1)):
                raise ClassifierError("max_features must be 'sqrt', a positive int or None")


# --------------------------------------------------------------------------
# linear SVC

def svc_objective(w, b, X, y_pm, C) -> float:
    """``0.5 * ||w||^2 + C * sum(max(0, 1 - y (w.x + b)))`` with ``y`` in {-1, +1}."""
    margins = y_pm * (X @ w + b)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - margins).sum())


def svc_subgradient(w, b, X, y_pm, C):
    """A subgradient of :func:`svc_objective`; the true gradient away from kinks."""
    active = y_pm * (X @ w + b) < 1.0
    ya = y_pm[active]
    gw = w - C * (ya @ X[active])
    gb = -C * float(ya.sum())
    return gw, gb


@dataclass(frozen=True)
class LinearSVCModel:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    objective_history: tuple[float, ...] = ()
    family: str = "linear_svc"

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def decision_function(self, X) -> np.ndarray:
        Z = (np.asarray(X, dtype=float) - self.mean) / self.scale
        return Z @ self.weights + self.bias

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) >= 0).astype(int)


def _train_linear_svc(spec: ClassifierSpec, X, y) -> LinearSVCModel:
    C = float(spec.params["C"])
    max_iter = int(spec.params["max_iter"])
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale
    y_pm = np.where(y == 1, 1.0, -1.0)
    n, d = Z.shape
    # every minimizer lies inside this ball: beyond it 0.5*||w||^2 > f(0) = C*n
    radius = math.sqrt(2.0 * C * n)

    w = np.zeros(d)
    b = 0.0
    obj = svc_objective(w, b, Z, y_pm, C)
    history = [obj]
    for t in range(1, max_iter + 1):
        gw, gb = svc_subgradient(w, b, Z, y_pm, C)
        if not np.any(gw) and gb == 0.0:
            break
        eta = 1.0 / (C * t)
        # halve the step until the objective does not increase
        for _ in range(40):
            w_new = w - eta * gw
            norm = math.sqrt(float(w_new @ w_new))
            if norm > radius:
                w_new *= radius / norm
            b_new = b - eta * gb
            obj_new = svc_objective(w_new, b_new, Z, y_pm, C)
            if obj_new <= obj:
                w, b, obj = w_new, b_new, obj_new
                break
            eta *= 0.5
        else:
            # stuck on a kink: later iterations would retry the same point
            break
        history.append(obj)
    return LinearSVCModel(w, float(b), mean, scale, tuple(history))


# --------------------------------------------------------------------------
# k nearest neighbours

@dataclass(frozen=True)
class KNNModel:
    X: np.ndarray
    y: np.ndarray
    k: int
    family: str = "knn"

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        k = min(self.k, len(self.y))
        out = np.empty(len(X), dtype=int)
        for start in range(0, len(X), 256):
            block = X[start:start + 256]
            dist = np.sqrt(((block[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2))
            for i, row in enumerate(dist):
                nearest = np.argsort(row, kind="stable")[:k]
                out[start + i] = _vote(self.y[nearest], row[nearest])
        return out


def _vote(labels, distances) -> int:
    ones = int(labels.sum())
    zeros = len(labels) - ones
    if ones != zeros:
        return int(ones > zeros)
    d1 = float(distances[labels == 1].sum())
    d0 = float(distances[labels == 0].sum())
    return 1 if d1 < d0 else 0


# --------------------------------------------------------------------------
# Gaussian naive Bayes

@dataclass(frozen=True)
class GaussianNBModel:
    priors: np.ndarray  # (2,)
    means: np.ndarray  # (2, d)
    variances: np.ndarray  # (2, d)
    family: str = "gaussian_nb"

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty((len(X), 2))
        for c in (0, 1):
            var = self.variances[c]
            out[:, c] = (
                math.log(self.priors[c])
                - 0.5 * np.sum(np.log(2.0 * np.pi * var))
                - 0.5 * np.sum((X - self.means[c]) ** 2 / var, axis=1)
            )
        return out

    def posterior(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        gap = jll[:, 1] - jll[:, 0]
        tol = _TIE_TOL * np.maximum(1.0, np.abs(jll).max(axis=1))
        return (gap > tol).astype(int)


def _train_gaussian_nb(spec: ClassifierSpec, X, y) -> GaussianNBModel:
    floor = float(spec.params["var_floor"])
    priors = np.array([np.mean(y == 0), np.mean(y == 1)])
    means = np.array([X[y == c].mean(axis=0) for c in (0, 1)])
    variances = np.array([np.maximum(X[y == c].var(axis=0), floor) for c in (0, 1)])
    return GaussianNBModel(priors, means, variances)


# --------------------------------------------------------------------------
# CART trees

@dataclass(frozen=True)
class TreeModel:
    """Flat binary tree; node ``i`` is a leaf when ``feature[i] == -1``.

    Rows with ``x[feature] <= threshold`` go to ``left``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int
    family: str = "decision_tree"

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = {0: 0}
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return max(depths.values())

    @property
    def features_used(self) -> tuple[int, ...]:
        return tuple(sorted({int(f) for f in self.feature if f >= 0}))

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=int)
        while True:
            f = self.feature[node]
            r = np.flatnonzero(f >= 0)
            if r.size == 0:
                return self.value[node].astype(int)
            at = node[r]
            go_left = X[r, f[r]] <= self.threshold[at]
            node[r] = np.where(go_left, self.left[at], self.right[at])


def _majority(y) -> int:
    ones = int(y.sum())
    return int(ones > len(y) - ones)


def best_split(X, y, features):
    """Lowest weighted Gini split over ``features`` and midpoints.

    Returns ``(feature, threshold)`` or None when every candidate feature is
    constant.  Ties go to the lowest feature index, then the lowest threshold.
    """
    best = None
    best_score = math.inf
    n = len(y)
    total_pos = float(y.sum())
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        cut = np.flatnonzero(xs[:-1] < xs[1:])
        if cut.size == 0:
            continue
        pos_left = np.cumsum(y[order], dtype=float)[cut]
        n_left = (cut + 1).astype(float)
        n_right = n - n_left
        pos_right = total_pos - pos_left
        neg_left = n_left - pos_left
        neg_right = n_right - pos_right
        # n_left*gini_left + n_right*gini_right, up to the constant n
        score = -(pos_left**2 + neg_left**2) / n_left - (pos_right**2 + neg_right**2) / n_right
        m = score.min()
        tol = _TIE_TOL * max(1.0, abs(m))
        j = int(np.flatnonzero(score <= m + tol)[0])
        if best is None or m < best_score - tol:
            lo, hi = xs[cut[j]], xs[cut[j] + 1]
            thr = 0.5 * (lo + hi)
            if not lo <= thr < hi:
                thr = lo
            best = (int(f), float(thr))
            best_score = m
    return best


def build_tree(X, y, min_samples_split=2, max_depth=None, feature_sampler=None) -> TreeModel:
    """Grow a CART classification tree depth-first.

    ``feature_sampler()``, when given, returns the candidate features for each
    split; otherwise every feature is scanned.
    """
    d = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0)
        return len(feature) - 1

    stack = [(new_node(), np.arange(len(y)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        ys = y[rows]
        value[node] = _majority(ys)
        pure = ys.min() == ys.max()
        if pure or len(rows) < min_samples_split or (max_depth is not None and depth >= max_depth):
            continue
        candidates = range(d) if feature_sampler is None else feature_sampler()
        split = best_split(X[rows], ys, candidates)
        if split is None:
            continue
        f, thr = split
        go_left = X[rows, f] <= thr
        feature[node], threshold[node] = f, thr
        left[node] = new_node()
        right[node] = new_node()
        # push right first so the left subtree is numbered first
        stack.append((right[node], rows[~go_left], depth + 1))
        stack.append((left[node], rows[go_left], depth + 1))

    return TreeModel(
        np.array(feature, dtype=int),
        np.array(threshold, dtype=float),
        np.array(left, dtype=int),
        np.array(right, dtype=int),
        np.array(value, dtype=int),
        d,
    )


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeModel, ...]
    family: str = "random_forest"

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    @property
    def feature_subsets(self) -> tuple[tuple[int, ...], ...]:
        return tuple(t.features_used for t in self.trees)

    def predict(self, X) -> np.ndarray:
        votes = np.sum([t.predict(X) for t in self.trees], axis=0)
        return (2 * votes > len(self.trees)).astype(int)


def _n_split_features(max_features, d: int) -> int:
    if max_features is None:
        return d
    if max_features == "sqrt":
        return math.ceil(math.sqrt(d))
    return min(int(max_features), d)


def _train_forest(spec: ClassifierSpec, X, y, threads: int) -> ForestModel:
    p = spec.params
    n, d = X.shape
    m = _n_split_features(p["max_features"], d)

    def grow(t: int) -> TreeModel:
        rng = np.random.default_rng(spec.seed + t)
        rows = rng.integers(0, n, size=n) if p["bootstrap"] else np.arange(n)
        sampler = None
        if m < d:
            sampler = lambda: np.sort(rng.choice(d, size=m, replace=False))  # noqa: E731
        return build_tree(
            X[rows], y[rows], int(p["min_samples_split"]), p["max_depth"], sampler
        )

    n_trees = int(p["n_trees"])
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = tuple(pool.map(grow, range(n_trees)))
    else:
        trees = tuple(grow(t) for t in range(n_trees))
    return ForestModel(trees)


# --------------------------------------------------------------------------
# public entry points

def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) == 0:
        raise ClassifierError("training matrix must be 2-D and non-empty")
    if len(y) != len(X):
        raise ClassifierError("labels and rows differ in length")
    if not np.all(np.isfinite(X)):
        raise ClassifierError("training matrix contains non-finite values")
    if not np.all((y == 0) | (y == 1)):
        raise ClassifierError("labels must be 0 or 1")
    return X, y.astype(int)


def train(spec: ClassifierSpec, X, y, threads: int = 1):
    """Fit ``spec`` on rows ``X`` with labels ``y``."""
    X, y = _check_xy(X, y)
    fam = spec.family
    if fam == "knn":
        return KNNModel(X.copy(), y.copy(), int(spec.params["k"]))
    if len(X) < 2 or y.min() == y.max():
        raise ClassifierError(f"{fam} needs at least two rows covering both classes")
    if fam == "linear_svc":
        return _train_linear_svc(spec, X, y)
    if fam == "gaussian_nb":
        return _train_gaussian_nb(spec, X, y)
    if fam == "decision_tree":
        return build_tree(X, y, int(spec.params["min_samples_split"]), spec.params["max_depth"])
    return _train_forest(spec, X, y, threads)


def predict(model, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ClassifierError(
            f"expected rows of width {model.n_features}, got shape {X.shape}"
        )
    if len(X) == 0:
        return np.empty(0, dtype=int)
    return model.predict(X)


def decision_weights(model) -> np.ndarray:
    """Absolute linear weights on the standardized scale."""
    if not isinstance(model, LinearSVCModel):
        raise ClassifierError(f"{model.family} has no linear weights")
    return np.abs(model.weights)


# --------------------------------------------------------------------------
# JSON documents

def _tree_to_dict(t: TreeModel) -> dict:
    return {
        "n_features": t.n_features,
        "feature": t.feature.tolist(),
        "threshold": t.threshold.tolist(),
        "left": t.left.tolist(),
        "right": t.right.tolist(),
        "value": t.value.tolist(),
    }


def _tree_from_dict(d: dict) -> TreeModel:
    return TreeModel(
        np.array(d["feature"], dtype=int),
        np.array(d["threshold"], dtype=float),
        np.array(d["left"], dtype=int),
        np.array(d["right"], dtype=int),
        np.array(d["value"], dtype=int),
        int(d["n_features"]),
    )


def model_to_dict(model) -> dict:
    """Versioned, JSON-ready description of a trained model."""
    doc = {"format_version": MODEL_FORMAT_VERSION, "family": model.family}
    if isinstance(model, LinearSVCModel):
        doc.update(
            weights=model.weights.tolist(),
            bias=model.bias,
            mean=model.mean.tolist(),
            scale=model.scale.tolist(),
        )
    elif isinstance(model, KNNModel):
        doc.update(X=model.X.tolist(), y=model.y.tolist(), k=model.k)
    elif isinstance(model, GaussianNBModel):
        doc.update(
            priors=model.priors.tolist(),
            means=model.means.tolist(),
            variances=model.variances.tolist(),
        )
    elif isinstance(model, TreeModel):
        doc["tree"] = _tree_to_dict(model)
    elif isinstance(model, ForestModel):
        doc["trees"] = [_tree_to_dict(t) for t in model.trees]
    else:
        raise ClassifierError(f"cannot serialize {type(model).__name__}")
    return doc


def model_from_dict(doc: dict):
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ClassifierError(f"unsupported model format version {version!r}")
    fam = doc.get("family")
    if fam == "linear_svc":
        return LinearSVCModel(
            np.array(doc["weights"], dtype=float),
            float(doc["bias"]),
            np.array(doc["mean"], dtype=float),
            np.array(doc["scale"], dtype=float),
        )
    if fam == "knn":
        X = np.array(doc["X"], dtype=float)
        return KNNModel(X.reshape(len(doc["y"]), -1), np.array(doc["y"], dtype=int), int(doc["k"]))
    if fam == "gaussian_nb":
        return GaussianNBModel(
            np.array(doc["priors"], dtype=float),
            np.array(doc["means"], dtype=float),
            np.array(doc["variances"], dtype=float),
        )
    if fam == "decision_tree":
        return _tree_from_dict(doc["tree"])
    if fam == "random_forest":
        return ForestModel(tuple(_tree_from_dict(t) for t in doc["trees"]))
    raise ClassifierError(f"unknown model family {fam!r}")
