# %% [markdown]
# # Windows, validity filtering and labels
#
# A dataset is a sequence of windows. Each window holds per-minute frames of
# normalized physiology and a reliability fraction `valid`.

# %%
import numpy as np

from stresslab.dataset import balance_classes, discretize_labels, filter_by_validity
from stresslab.synth import SynthConfig, generate

ds = generate(SynthConfig(n_windows=40, frames_per_window=20, seed=3))
w = ds.windows[0]
print(len(ds), "windows;", len(w.frames), "frames in the first one")
print("first frame:", w.frames[0].to_json())

# %%
# Frames with valid < p are dropped. p is inclusive.
for p in (0.3, 0.5, 0.7):
    kept = filter_by_validity(ds, p)
    frames = sum(len(x.frames) for x in kept)
    print(f"p={p}: {len(kept)} windows, {frames} frames")

# %%
# Raw labels are 0..3; anything at or above the threshold counts as stress.
ds = discretize_labels(filter_by_validity(ds, 0.5), threshold=1)
print("class counts:", np.bincount(ds.labels))
bal = balance_classes(ds, seed=42)
print("after balancing:", np.bincount(bal.labels))
