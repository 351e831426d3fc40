"""End-to-end workflow: filter, label, balance, select, validate, fit, predict."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import ClassifierSpec, predict, train
from .dataset import (
    Dataset,
    balance_classes,
    discretize_labels,
    drop_short_windows,
    filter_by_validity,
    load_dataset,
    write_predictions,
)
from .evaluation import F1_MODES, CVResult, cross_val_score, undersample
from .features import DEFAULT_EPS, FEATURE_NAMES, extract_matrix, extract_window_features
from .selection import FeatureSubset, ScreenReport, rfecv_select, ridge_screen, sequential_select

log = logging.getLogger(__name__)

SELECTORS = ("sfs", "rfecv", "none")
BALANCE_MODES = ("before_split", "train_folds")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class PipelineConfig:
    train_path: str = ""
    test_path: str | None = None
    p: float = 0.5
    threshold: int = 1
    seed: int = 42
    family: str = "linear_svc"
    params: dict = field(default_factory=dict)
    selector: str = "sfs"
    k_target: int = 5
    direction: str = "forward"
    folds: int = 3
    f1_mode: str = "positive"
    balance: str = "before_split"
    eps: float = DEFAULT_EPS
    ridge_lambda: float = 1.0
    ridge_lower: float = 0.2
    ridge_upper: float = 2.0
    report_path: str | None = None
    answer_path: str | None = None

    def validate(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.selector not in SELECTORS:
            raise ValueError(f"selector must be one of {SELECTORS}")
        if self.f1_mode not in F1_MODES:
            raise ValueError(f"f1_mode must be one of {F1_MODES}")
        if self.balance not in BALANCE_MODES:
            raise ValueError(f"balance must be one of {BALANCE_MODES}")

    def classifier(self) -> ClassifierSpec:
        return ClassifierSpec(self.family, dict(self.params), self.seed)

    def echo(self) -> dict:
        out = asdict(self)
        out["params"] = self.classifier().params
        return out


@dataclass
class EvalReport:
    config: dict
    counts: dict
    screen: ScreenReport
    subset: FeatureSubset
    cv: CVResult
    fallback_label: int
    test: dict | None = None
    predictions: list[int] | None = None

    @property
    def mean_accuracy(self) -> float:
        return self.cv.mean_accuracy

    @property
    def mean_f1(self) -> float:
        return self.cv.mean_f1

    def to_dict(self) -> dict:
        return {
            "tool": "stresslab",
            "version": __version__,
            "config": self.config,
            "counts": self.counts,
            "screen": self.screen.to_dict(),
            "selection": {"selector": self.config["selector"], **self.subset.to_dict()},
            "cv": {
                "folds": [f.to_dict() for f in self.cv.folds],
                "mean_accuracy": self.cv.mean_accuracy,
                "mean_f1": self.cv.mean_f1,
                "mean_f1_positive": self.cv.mean_f1_positive,
                "mean_f1_macro": self.cv.mean_f1_macro,
                "f1_mode": self.cv.f1_mode,
                "confusion": self.cv.confusion,
            },
            "fallback_label": self.fallback_label,
            "test": self.test,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def prepare_training(dataset: Dataset, p: float, threshold: int, seed: int,
                     balance: bool = True) -> tuple[Dataset, dict]:
    """Filter, discretize, drop sub-2-frame windows and optionally balance."""
    counts = {"loaded": len(dataset)}
    ds = filter_by_validity(dataset, p)
    counts["after_filter"] = len(ds)
    if len(ds) == 0:
        raise PipelineError("filter", f"no windows survive validity filtering at p={p}")
    try:
        ds = discretize_labels(ds, threshold)
    except ValueError as exc:
        raise PipelineError("discretize", str(exc)) from exc
    ds = drop_short_windows(ds, 2)
    counts["after_min_frames"] = len(ds)
    if len(ds) == 0:
        raise PipelineError("filter", f"no window keeps two or more frames at p={p}")
    labels = ds.labels
    counts["class_counts"] = {"0": int(np.sum(labels == 0)), "1": int(np.sum(labels == 1))}
    if balance:
        try:
            ds = balance_classes(ds, seed)
        except ValueError as exc:
            raise PipelineError("balance", str(exc)) from exc
    counts["after_balance"] = len(ds)
    return ds, counts


def majority_label(y) -> int:
    y = np.asarray(y, dtype=int)
    return int(2 * y.sum() > len(y))


def predict_windows(model, indices, dataset: Dataset, p: float, fallback: int,
                    eps: float = DEFAULT_EPS) -> tuple[list[int], int]:
    """One label per input window, in input order.

    Windows left with fewer than two frames after filtering get ``fallback``.
    Returns the labels and how many used the fallback.
    """
    kept = drop_short_windows(filter_by_validity(dataset, p), 2)
    out = {w.sequence_index: fallback for w in dataset.windows}
    if len(kept):
        X = np.array([extract_window_features(w, eps).values for w in kept.windows])
        pred = predict(model, X[:, list(indices)])
        for w, label in zip(kept.windows, pred):
            out[w.sequence_index] = int(label)
    labels = [out[w.sequence_index] for w in dataset.windows]
    return labels, len(dataset) - len(kept)


def select_features(cfg: PipelineConfig, X, y, names=FEATURE_NAMES, threads: int = 1) -> FeatureSubset:
    spec = cfg.classifier()
    fold_seed = cfg.seed if cfg.balance == "train_folds" else None
    if cfg.selector == "sfs":
        return sequential_select(X, y, spec, cfg.k_target, cfg.direction, cfg.folds,
                                 names=names, balance_seed=fold_seed, threads=threads)
    if cfg.selector == "rfecv":
        return rfecv_select(X, y, spec, cfg.k_target, cfg.folds,
                            names=names, balance_seed=fold_seed)
    all_idx = tuple(range(X.shape[1]))
    score = cross_val_score(spec, X, y, cfg.folds, balance_seed=fold_seed).mean_accuracy
    return FeatureSubset(all_idx, score, tuple(names))


def run_pipeline(cfg: PipelineConfig, threads: int = 1) -> EvalReport:
    """Run the whole workflow and write the report/answer files named in ``cfg``."""
    cfg.validate()
    try:
        spec = cfg.classifier()
    except ValueError as exc:
        raise PipelineError("config", str(exc)) from exc

    try:
        raw = load_dataset(cfg.train_path, "train")
    except (OSError, ValueError) as exc:
        raise PipelineError("load", f"{cfg.train_path}: {exc}") from exc
    ds, counts = prepare_training(raw, cfg.p, cfg.threshold, cfg.seed,
                                  balance=cfg.balance == "before_split")
    log.info("training windows: %s", counts)

    try:
        matrix = extract_matrix(ds, cfg.eps)
    except ValueError as exc:
        raise PipelineError("extract", str(exc)) from exc
    X, y = matrix.X, matrix.y

    screen = ridge_screen(X, y, cfg.ridge_lambda, cfg.ridge_lower, cfg.ridge_upper)
    fold_seed = cfg.seed if cfg.balance == "train_folds" else None
    try:
        subset = select_features(cfg, X, y, threads=threads)
    except ValueError as exc:
        raise PipelineError("select", str(exc)) from exc
    cols = list(subset.indices)
    log.info("selected features: %s", subset.names)

    try:
        cv = cross_val_score(spec, X[:, cols], y, cfg.folds, f1_mode=cfg.f1_mode,
                             balance_seed=fold_seed, threads=threads)
    except ValueError as exc:
        raise PipelineError("evaluate", str(exc)) from exc

    rows = np.arange(len(y))
    if cfg.balance == "train_folds":
        rows = undersample(rows, y, cfg.seed)
    try:
        model = train(spec, X[np.ix_(rows, cols)], y[rows], threads=threads)
    except ValueError as exc:
        raise PipelineError("fit", str(exc)) from exc
    fallback = majority_label(y[rows])

    report = EvalReport(cfg.echo(), counts, screen, subset, cv, fallback)
    if cfg.test_path:
        try:
            test = load_dataset(cfg.test_path, "test")
        except (OSError, ValueError) as exc:
            raise PipelineError("load", f"{cfg.test_path}: {exc}") from exc
        labels, n_fallback = predict_windows(model, cols, test, cfg.p, fallback, cfg.eps)
        report.predictions = labels
        report.test = {"n_windows": len(test), "n_fallback": n_fallback,
                       "predicted_positive": int(sum(labels))}
        if cfg.answer_path:
            try:
                write_predictions(labels, cfg.answer_path)
            except ValueError as exc:
                raise PipelineError("output", str(exc)) from exc
    if cfg.report_path:
        Path(cfg.report_path).write_text(report.to_json(), encoding="utf-8")
    return report


def sweep(cfg: PipelineConfig, ps, threads: int = 1) -> list[dict]:
    """Cross-validated accuracy/F1 for each filter ratio in ``ps``."""
    rows = []
    for p in ps:
        run = PipelineConfig(**{**asdict(cfg), "p": float(p), "test_path": None,
                                "report_path": None, "answer_path": None})
        report = run_pipeline(run, threads)
        rows.append({
            "p": float(p),
            "accuracy": report.cv.mean_accuracy,
            "f1": report.cv.mean_f1,
            "f1_macro": report.cv.mean_f1_macro,
            "n_windows": report.counts["after_balance"],
            "features": list(report.subset.names),
        })
    return rows


def format_sweep(rows: list[dict]) -> str:
    lines = [f"{'Non-zero ratio':>14} | {'Accuracy':>8} | {'F1 Score':>8} | {'Windows':>7}"]
    lines.append("-" * len(lines[0]))
    for r in rows:
        lines.append(f"{r['p']:>14.2f} | {r['accuracy']:>8.4f} | {r['f1']:>8.4f} | {r['n_windows']:>7d}")
    return "\n".join(lines) + "\n"


def format_summary(report: EvalReport) -> str:
    """One-row table with the classifier and its k-fold accuracy and F1."""
    spec = report.config
    name = spec["family"]
    if name == "knn":
        name = f"{spec['params']['k']}-NN"
    head = f"{'Method':<16} | {'K-fold Acc':>10} | {'K-fold F1':>9} | Features"
    row = (f"{name:<16} | {report.cv.mean_accuracy:>10.4f} | {report.cv.mean_f1:>9.4f} | "
           + ", ".join(report.subset.names))
    return f"{head}\n{'-' * len(head)}\n{row}\n"
