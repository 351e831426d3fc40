import numpy as np
import pytest

from stresslab.dataset import Dataset, LabeledWindow, MinuteFrame
from stresslab.synth import SynthConfig, generate

ACCEPTANCE_RESULTS = []


def make_frame(valid=1.0, **overrides):
    values = dict(
        heart_rate=0.5, sdnn=0.4, rmssd=0.3, lf_power=0.2, hf_power=0.1,
        gsr_level=0.6, skin_temp=0.5, skin_temp_std=0.05,
    )
    values.update(overrides)
    return MinuteFrame(valid_fraction=valid, **values)


def make_window(frames, raw_label=0, index=0, label=None):
    return LabeledWindow(tuple(frames), raw_label, label, index)


def random_window(rng, n_frames=60, index=0, raw_label=0):
    vals = rng.uniform(0, 1, size=(n_frames, 9))
    return make_window([MinuteFrame(*map(float, row)) for row in vals], raw_label, index)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synth_train():
    return generate(SynthConfig(n_windows=120, effect_size=0.15, seed=11))


@pytest.fixture
def labeled(rng):
    windows = [random_window(rng, 10, i, raw_label=i % 3) for i in range(12)]
    return Dataset(tuple(windows), True)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and (rep.when == "call" or (rep.when == "setup" and rep.skipped)):
        ACCEPTANCE_RESULTS.append((marker.args[0], rep.outcome, rep.duration))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration in sorted(ACCEPTANCE_RESULTS):
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{status:<7} {name}  ({duration:.1f}s)")
