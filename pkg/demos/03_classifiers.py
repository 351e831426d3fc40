# %% [markdown]
# # Five classifiers, one interface
#
# `train(spec, X, y)` fits, `predict(model, X)` returns 0/1 labels.
# Every family is scored here with ordered 3-fold cross-validation.

# %%
from stresslab.classifiers import FAMILIES, ClassifierSpec
from stresslab.evaluation import cross_val_score
from stresslab.features import extract_matrix
from stresslab.pipeline import prepare_training
from stresslab.synth import SynthConfig, generate

ds, counts = prepare_training(generate(SynthConfig(n_windows=200, effect_size=0.05, seed=2)),
                              p=0.5, threshold=1, seed=42)
m = extract_matrix(ds)
print(counts)

# %%
for family in FAMILIES:
    params = {"n_trees": 25} if family == "random_forest" else {}
    cv = cross_val_score(ClassifierSpec(family, params), m.X, m.y, k=3)
    print(f"{family:>14s}  acc {cv.mean_accuracy:.3f}  f1 {cv.mean_f1:.3f}")
