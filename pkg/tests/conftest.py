import sys

import numpy as np
import pytest

from sdlk.types import DataMatrix, DomainPair, LabeledDataset


def make_pair(rng, d=3, n_s=6, n_t=5, n_classes=2, offset=0.5):
    Xs = rng.standard_normal((d, n_s))
    Xt = rng.standard_normal((d, n_t)) + offset
    ys = np.arange(n_s) % n_classes
    yt = np.arange(n_t) % n_classes
    return DomainPair(LabeledDataset(DataMatrix(Xs), ys), LabeledDataset(DataMatrix(Xt), yt))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[key])
