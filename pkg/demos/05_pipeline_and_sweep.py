# %% [markdown]
# # The whole pipeline, and a validity sweep

# %%
import tempfile
from pathlib import Path

from stresslab.dataset import write_dataset
from stresslab.pipeline import PipelineConfig, format_summary, format_sweep, run_pipeline, sweep
from stresslab.synth import SynthConfig, generate

tmp = Path(tempfile.mkdtemp())
write_dataset(generate(SynthConfig(n_windows=200, effect_size=0.1, seed=1)), tmp / "train.jsonl")
write_dataset(generate(SynthConfig(n_windows=50, effect_size=0.1, seed=2), labeled=False),
              tmp / "test.jsonl")

cfg = PipelineConfig(train_path=str(tmp / "train.jsonl"), test_path=str(tmp / "test.jsonl"),
                     answer_path=str(tmp / "answer.txt"), params={"max_iter": 500})
report = run_pipeline(cfg)
print(format_summary(report))
print("selected:", report.subset.names)
print("answers:", (tmp / "answer.txt").read_text().split()[:10], "...")

# %%
# Stricter p keeps cleaner frames but loses windows
rows = sweep(PipelineConfig(train_path=str(tmp / "train.jsonl"), family="gaussian_nb", k_target=3),
             [0.3, 0.4, 0.5, 0.6, 0.7])
print(format_sweep(rows))
