import numpy as np
import pytest

from micmac.dataset import Dataset
from micmac.synth import SynthConfig, generate

_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance line: call with (label, passed, detail)."""

    def record(label, passed, detail=""):
        _CRITERIA.append((label, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")


@pytest.fixture(scope="session")
def planted():
    """Small planted dataset: 20 subjects x 9 samples, 40 features, 4 informative."""
    return generate(SynthConfig(n_subjects=20, n_features=40, n_informative=4, effect_size=2.0, seed=3))


def make_dataset(values, subjects, labels, names=None, times=None):
    values = np.asarray(values, dtype=float)
    if names is None:
        names = [f"f{j}" for j in range(values.shape[1])]
    if times is None:
        times = np.ones(len(values), dtype=int)
    return Dataset(values, np.asarray(subjects), times, np.asarray(labels), tuple(names))
