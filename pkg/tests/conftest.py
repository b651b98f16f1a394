import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"

_ACCEPTANCE = []


def random_boxes(rng, n, lo=0.0, hi=100.0, min_size=0.5, max_size=60.0):
    xy = rng.uniform(lo, hi, size=(n, 2))
    wh = rng.uniform(min_size, max_size, size=(n, 2))
    return np.concatenate([xy, xy + wh], axis=1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def coco_fixture():
    return FIXTURES / "coco_small.json"


@pytest.fixture
def criterion():
    """Record an acceptance criterion outcome for the terminal summary."""

    def record(name, ok, detail=""):
        _ACCEPTANCE.append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
