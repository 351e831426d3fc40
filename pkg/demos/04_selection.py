# %% [markdown]
# # Feature screening and selection

# %%
from stresslab.classifiers import ClassifierSpec
from stresslab.features import FEATURE_NAMES, extract_matrix
from stresslab.pipeline import prepare_training
from stresslab.selection import rfecv_select, ridge_screen, sequential_select
from stresslab.synth import SynthConfig, generate

ds, _ = prepare_training(generate(SynthConfig(n_windows=200, effect_size=0.05, seed=5)),
                         p=0.5, threshold=1, seed=42)
m = extract_matrix(ds)

# %%
# The ridge screen is advisory: it flags features whose single-column
# coefficient lands in the band, nothing is removed.
report = ridge_screen(m.X, m.y, names=FEATURE_NAMES)
for e in report.entries:
    print(f"{e.name:>16s} {e.coefficient: .3f} {'in band' if e.in_band else ''}")

# %%
svc = ClassifierSpec("linear_svc", {"max_iter": 500})
fwd = sequential_select(m.X, m.y, svc, k_target=5, names=FEATURE_NAMES)
print("forward:", fwd.names, round(fwd.score, 3))
rfe = rfecv_select(m.X, m.y, svc, k_min=3, names=FEATURE_NAMES)
print("rfecv:  ", rfe.names, round(rfe.score, 3))
