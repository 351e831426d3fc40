# %% [markdown]
# # Window features
#
# Sixteen statistics summarize a window: heart-rate and HRV levels, the
# LF/HF balance, skin conductance, and skin-temperature trend.

# %%
import numpy as np

from stresslab.dataset import discretize_labels, filter_by_validity
from stresslab.features import FEATURE_NAMES, extract_matrix, extract_window_features
from stresslab.synth import SynthConfig, generate

ds = generate(SynthConfig(n_windows=200, effect_size=0.15, seed=1))
ds = discretize_labels(filter_by_validity(ds, 0.5))
fv = extract_window_features(ds.windows[0])
for name, value in fv.as_dict().items():
    print(f"{name:>16s} {value: .4f}")

# %%
# Class-conditional means show which features carry the planted signal
m = extract_matrix(ds)
y = m.y
gap = m.X[y == 1].mean(axis=0) - m.X[y == 0].mean(axis=0)
for j in np.argsort(-np.abs(gap))[:6]:
    print(f"{FEATURE_NAMES[j]:>16s} gap {gap[j]: .4f}")
