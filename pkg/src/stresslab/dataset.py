"""Minute-frame windows: ingestion, validity filtering, labels and balancing.

A window is an ordered run of per-minute physiological summaries that shares
one self-reported stress label.  Files are JSON Lines, one window per line::

    {"raw_label": 2, "frames": [{"hr": 0.41, "sdnn": 0.3, "rmssd": 0.28,
      "lf": 0.2, "hf": 0.1, "gsr": 0.55, "st": 0.61, "st_std": 0.04,
      "valid": 1.0}, ...]}

Unlabeled (test) files omit ``raw_label``.  Every operation here returns a
new object; inputs are never modified.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

# attribute name -> JSON key, in the order frames are written
CHANNEL_KEYS = {
    "heart_rate": "hr",
    "sdnn": "sdnn",
    "rmssd": "rmssd",
    "lf_power": "lf",
    "hf_power": "hf",
    "gsr_level": "gsr",
    "skin_temp": "st",
    "skin_temp_std": "st_std",
}
CHANNELS = tuple(CHANNEL_KEYS)
VALID_KEY = "valid"

SCHEMAS = ("train", "test")


class DatasetError(ValueError):
    """Raised for malformed window files or invalid dataset operations."""


@dataclass(frozen=True)
class MinuteFrame:
    heart_rate: float
    sdnn: float
    rmssd: float
    lf_power: float
    hf_power: float
    gsr_level: float
    skin_temp: float
    skin_temp_std: float
    valid_fraction: float

    def __post_init__(self):
        for name in CHANNELS + ("valid_fraction",):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DatasetError(f"{name}={value!r} outside [0, 1]")

    def to_json(self) -> dict:
        out = {key: getattr(self, attr) for attr, key in CHANNEL_KEYS.items()}
        out[VALID_KEY] = self.valid_fraction
        return out


@dataclass(frozen=True)
class LabeledWindow:
    frames: tuple[MinuteFrame, ...]
    raw_label: int | None = None
    label: int | None = None
    sequence_index: int = 0

    def __post_init__(self):
        if len(self.frames) == 0:
            raise DatasetError(f"window {self.sequence_index} has no frames")

    def __len__(self):
        return len(self.frames)

    def channel(self, name: str) -> np.ndarray:
        """Values of one channel (or ``valid_fraction``) across the frames."""
        return np.array([getattr(f, name) for f in self.frames], dtype=float)


@dataclass(frozen=True)
class Dataset:
    windows: tuple[LabeledWindow, ...]
    has_labels: bool

    def __post_init__(self):
        idx = [w.sequence_index for w in self.windows]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise DatasetError("windows must be in strictly increasing sequence_index order")

    def __len__(self):
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    @property
    def labels(self) -> np.ndarray:
        if any(w.label is None for w in self.windows):
            raise DatasetError("dataset has not been discretized")
        return np.array([w.label for w in self.windows], dtype=int)

    @property
    def raw_labels(self) -> list[int | None]:
        return [w.raw_label for w in self.windows]


def _parse_frame(obj, lineno: int) -> MinuteFrame:
    if not isinstance(obj, dict):
        raise DatasetError(f"line {lineno}: frame must be an object")
    values = {}
    for attr, key in list(CHANNEL_KEYS.items()) + [("valid_fraction", VALID_KEY)]:
        if key not in obj:
            raise DatasetError(f"line {lineno}: frame missing field {key!r}")
        value = obj[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DatasetError(f"line {lineno}: field {key!r} is not a number")
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise DatasetError(
                f"line {lineno}: field {key!r} ({attr}) = {value!r} outside [0, 1]"
            )
        values[attr] = value
    return MinuteFrame(**values)


def parse_window(line: str, lineno: int, schema: str, sequence_index: int) -> LabeledWindow:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"line {lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise DatasetError(f"line {lineno}: window must be an object")
    frames = obj.get("frames")
    if not isinstance(frames, list):
        raise DatasetError(f"line {lineno}: missing 'frames' list")
    if not frames:
        raise DatasetError(f"line {lineno}: window has zero frames")
    raw_label = None
    if schema == "train":
        raw_label = obj.get("raw_label")
        if isinstance(raw_label, bool) or not isinstance(raw_label, int) or raw_label < 0:
            raise DatasetError(f"line {lineno}: 'raw_label' must be a non-negative integer")
    return LabeledWindow(
        frames=tuple(_parse_frame(f, lineno) for f in frames),
        raw_label=raw_label,
        sequence_index=sequence_index,
    )


def load_dataset(path: str | Path, schema: str = "train") -> Dataset:
    """Read a JSONL window file.

    Blank lines are skipped.  Errors carry the 1-based line number.
    """
    if schema not in SCHEMAS:
        raise ValueError(f"schema must be one of {SCHEMAS}, got {schema!r}")
    windows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            windows.append(parse_window(line, lineno, schema, len(windows)))
    return Dataset(tuple(windows), has_labels=(schema == "train"))


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write windows as JSONL; ``raw_label`` is written only for labeled data."""
    with open(path, "w", encoding="utf-8") as fh:
        for w in dataset.windows:
            obj = {}
            if dataset.has_labels:
                obj["raw_label"] = w.raw_label
            obj["frames"] = [f.to_json() for f in w.frames]
            fh.write(json.dumps(obj) + "\n")


def filter_by_validity(dataset: Dataset, p: float) -> Dataset:
    """Drop frames whose ``valid_fraction`` is below ``p`` (``p`` itself is kept).

    Windows left without frames are dropped; survivors keep their order and
    ``sequence_index``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    kept = []
    for w in dataset.windows:
        frames = tuple(f for f in w.frames if f.valid_fraction >= p)
        if not frames:
            continue
        kept.append(w if len(frames) == len(w.frames) else replace(w, frames=frames))
    return Dataset(tuple(kept), dataset.has_labels)


def discretize_labels(dataset: Dataset, threshold: int = 1) -> Dataset:
    """Binary label: 1 when ``raw_label >= threshold``."""
    if not dataset.has_labels:
        raise DatasetError("cannot discretize an unlabeled dataset")
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold!r}")
    windows = tuple(
        replace(w, label=int(w.raw_label >= threshold)) for w in dataset.windows
    )
    return Dataset(windows, True)


def balance_classes(dataset: Dataset, seed: int) -> Dataset:
    """Undersample the majority class uniformly at random to the minority count.

    Survivors keep their chronological order.
    """
    if not dataset.has_labels:
        raise DatasetError("cannot balance an unlabeled dataset")
    labels = dataset.labels
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == 0)
    if len(pos) == 0 or len(neg) == 0:
        raise DatasetError("balancing needs both classes present")
    if len(pos) == len(neg):
        return dataset
    major, minor = (pos, neg) if len(pos) > len(neg) else (neg, pos)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(major, size=len(minor), replace=False)
    keep = np.sort(np.concatenate([minor, chosen]))
    return Dataset(tuple(dataset.windows[i] for i in keep), True)


def drop_short_windows(dataset: Dataset, min_frames: int = 2) -> Dataset:
    return Dataset(
        tuple(w for w in dataset.windows if len(w.frames) >= min_frames),
        dataset.has_labels,
    )


def write_predictions(labels: Sequence[int] | Iterable[int], path: str | Path) -> None:
    """Write one ``0``/``1`` per line, newline terminated."""
    labels = [int(v) for v in labels]
    if not labels:
        raise ValueError("no predictions to write")
    if any(v not in (0, 1) for v in labels):
        raise ValueError("predictions must be 0 or 1")
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("".join(f"{v}\n" for v in labels))
    except OSError as exc:
        raise DatasetError(f"cannot write predictions to {path}: {exc}") from exc


def read_predictions(path: str | Path) -> list[int]:
    with open(path, encoding="ascii") as fh:
        return [int(line) for line in fh.read().splitlines()]
