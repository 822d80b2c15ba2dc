import numpy as np
import pytest

from somkit import NormalizationParams, SomModel, WeightMatrix

ACCEPTANCE_RESULTS = []


def make_model(weights, side, dim=None):
    """Model with identity normalization, so raw == normalized."""
    w = np.asarray(weights, dtype=float)
    dim = dim or w.shape[1]
    return SomModel(WeightMatrix(side, dim, w.reshape(side * side, dim)), NormalizationParams.identity(dim))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for ok, name, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
