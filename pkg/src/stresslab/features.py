"""Window-level features aggregated from the surviving minute frames."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset, LabeledWindow

FEATURE_NAMES = (
    "hr_mean",
    "hr_std",
    "hr_qdev",
    "hrv_sdnn_std",
    "hrv_sdnn_mean",
    "hrv_rmssd_mean",
    "lf_p90",
    "lfhf_p90",
    "lfhf_mean",
    "gsr_mean",
    "gsr_qdev",
    "st_mean",
    "st_var_mean",
    "st_slope_max",
    "st_slope_mean",
    "st_slope_p90",
)
N_FEATURES = len(FEATURE_NAMES)
DEFAULT_EPS = 1e-6


class FeatureError(ValueError):
    pass


def percentile(values, q: float) -> float:
    """Percentile with linear interpolation at rank ``q/100 * (n - 1)``."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise FeatureError("percentile of an empty sequence")
    if not 0.0 <= q <= 100.0:
        raise ValueError(f"q must lie in [0, 100], got {q!r}")
    return float(np.percentile(values, q, method="linear"))


def quartile_deviation(values) -> float:
    return percentile(values, 75) - percentile(values, 25)


def slope_series(values) -> np.ndarray:
    """Minute-to-minute differences; length ``n - 1``."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise FeatureError("slope needs at least two values")
    return np.diff(values)


def lf_hf_ratio(lf, hf, eps: float = DEFAULT_EPS):
    """LF/HF with the denominator floored at ``eps``.  Works elementwise."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    out = np.asarray(lf, dtype=float) / np.maximum(np.asarray(hf, dtype=float), eps)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    names: tuple[str, ...] = FEATURE_NAMES

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, map(float, self.values)))

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])


def extract_window_features(window: LabeledWindow, eps: float = DEFAULT_EPS) -> FeatureVector:
    if len(window.frames) < 2:
        raise FeatureError(
            f"window {window.sequence_index} has {len(window.frames)} frame(s); "
            "at least 2 are needed"
        )
    hr = window.channel("heart_rate")
    sdnn = window.channel("sdnn")
    lf = window.channel("lf_power")
    ratio = lf_hf_ratio(lf, window.channel("hf_power"), eps)
    gsr = window.channel("gsr_level")
    st = window.channel("skin_temp")
    st_slope = slope_series(st)

    values = np.array([
        hr.mean(),
        hr.std(),
        quartile_deviation(hr),
        sdnn.std(),
        sdnn.mean(),
        window.channel("rmssd").mean(),
        percentile(lf, 90),
        percentile(ratio, 90),
        ratio.mean(),
        gsr.mean(),
        quartile_deviation(gsr),
        st.mean(),
        window.channel("skin_temp_std").mean(),
        st_slope.max(),
        st_slope.mean(),
        percentile(st_slope, 90),
    ])
    if not np.all(np.isfinite(values)):
        raise FeatureError(f"window {window.sequence_index} produced non-finite features")
    return FeatureVector(values)


@dataclass(frozen=True)
class FeatureMatrix:
    """Rows of window features; ``labels`` is None for unlabeled data.

    ``sequence_index`` records which window each row came from.
    """

    X: np.ndarray
    labels: np.ndarray | None = None
    sequence_index: np.ndarray | None = None
    names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[1] != len(self.names):
            raise FeatureError(f"matrix shape {self.X.shape} does not match {len(self.names)} names")
        if self.labels is not None and len(self.labels) != len(self.X):
            raise FeatureError("labels and rows differ in length")

    def __len__(self):
        return len(self.X)

    @property
    def y(self) -> np.ndarray:
        if self.labels is None:
            raise FeatureError("matrix has no labels")
        return self.labels

    def subset(self, indices) -> "FeatureMatrix":
        indices = list(indices)
        return FeatureMatrix(
            self.X[:, indices],
            self.labels,
            self.sequence_index,
            tuple(self.names[i] for i in indices),
        )


def extract_matrix(dataset: Dataset, eps: float = DEFAULT_EPS) -> FeatureMatrix:
    rows = [extract_window_features(w, eps).values for w in dataset.windows]
    X = np.array(rows, dtype=float).reshape(len(rows), N_FEATURES)
    labels = dataset.labels if dataset.has_labels else None
    seq = np.array([w.sequence_index for w in dataset.windows], dtype=int)
    return FeatureMatrix(X, labels, seq)


def write_matrix_csv(matrix: FeatureMatrix, path: str | Path) -> None:
    """CSV with the feature names plus ``label`` (empty when unlabeled)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(matrix.names) + ["label"])
        for i, row in enumerate(matrix.X):
            label = "" if matrix.labels is None else int(matrix.labels[i])
            writer.writerow([repr(float(v)) for v in row] + [label])


def read_matrix_csv(path: str | Path) -> FeatureMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "label":
            raise FeatureError(f"{path}: last column must be 'label'")
        names = tuple(header[:-1])
        rows, labels = [], []
        for row in reader:
            rows.append([float(v) for v in row[:-1]])
            labels.append(row[-1])
    X = np.array(rows, dtype=float).reshape(len(rows), len(names))
    if labels and all(v != "" for v in labels):
        y = np.array([int(v) for v in labels], dtype=int)
    else:
        y = None
    return FeatureMatrix(X, y, names=names)
