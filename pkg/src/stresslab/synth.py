"""Seeded synthetic windows with a planted stress signal.

Stressed windows raise heart rate and skin conductance and lower HRV (SDNN,
RMSSD) and skin temperature, each by ``effect_size``.  Unreliable frames get
a validity fraction below 0.5 and zeroed channels, as a device that was not
worn would report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import CHANNELS, Dataset, LabeledWindow, MinuteFrame

BASELINE = {
    "heart_rate": 0.5,
    "sdnn": 0.5,
    "rmssd": 0.45,
    "lf_power": 0.4,
    "hf_power": 0.35,
    "gsr_level": 0.4,
    "skin_temp": 0.55,
    "skin_temp_std": 0.2,
}
# +1 rises under stress, -1 falls, 0 unaffected
STRESS_DIRECTION = {
    "heart_rate": 1,
    "sdnn": -1,
    "rmssd": -1,
    "lf_power": 0,
    "hf_power": 0,
    "gsr_level": 1,
    "skin_temp": -1,
    "skin_temp_std": 0,
}
NOISE_SIGMA = 0.05


@dataclass(frozen=True)
class SynthConfig:
    n_windows: int = 400
    frames_per_window: int = 60
    stress_fraction: float = 0.5
    effect_size: float = 0.15
    invalid_frame_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_windows < 1 or self.frames_per_window < 1:
            raise ValueError("n_windows and frames_per_window must be >= 1")
        for name in ("stress_fraction", "invalid_frame_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.effect_size < 0:
            raise ValueError("effect_size must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def generate(config: SynthConfig, labeled: bool = True) -> Dataset:
    """Draw a dataset; ``labeled=False`` yields test-schema windows (no labels)."""
    rng = np.random.default_rng(config.seed)
    n, m = config.n_windows, config.frames_per_window
    n_stress = int(round(config.stress_fraction * n))
    stressed = np.zeros(n, dtype=bool)
    stressed[rng.permutation(n)[:n_stress]] = True
    n_invalid = int(round(config.invalid_frame_rate * m))

    base = np.array([BASELINE[c] for c in CHANNELS])
    direction = np.array([STRESS_DIRECTION[c] for c in CHANNELS], dtype=float)
    windows = []
    for i in range(n):
        # window-level offset plus minute-level noise
        centre = base + rng.normal(0.0, NOISE_SIGMA, size=len(CHANNELS))
        if stressed[i]:
            centre = centre + config.effect_size * direction
        values = np.clip(centre + rng.normal(0.0, NOISE_SIGMA, size=(m, len(CHANNELS))), 0.0, 1.0)
        valid = rng.uniform(0.5, 1.0, size=m)
        bad = rng.permutation(m)[:n_invalid]
        valid[bad] = rng.uniform(0.0, 0.5, size=n_invalid)
        values[bad] = 0.0
        frames = tuple(
            MinuteFrame(*map(float, values[j]), valid_fraction=float(valid[j])) for j in range(m)
        )
        windows.append(LabeledWindow(
            frames,
            raw_label=int(stressed[i]) if labeled else None,
            sequence_index=i,
        ))
    return Dataset(tuple(windows), has_labels=labeled)
