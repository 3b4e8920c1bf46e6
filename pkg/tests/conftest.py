import numpy as np
import pytest
from hypothesis import strategies as st

from swapbalance.level import Level, TileKind


def random_level(rng: np.random.Generator, width=6, height=6, kinds=tuple(TileKind),
                 p=None) -> Level:
    idx = rng.choice(len(kinds), size=width * height, p=p)
    return Level(width, height, tuple(kinds[i] for i in idx))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@st.composite
def levels(draw, kinds=tuple(TileKind), min_side=2, max_side=7):
    w = draw(st.integers(min_side, max_side))
    h = draw(st.integers(min_side, max_side))
    cells = draw(st.lists(st.sampled_from(kinds), min_size=w * h, max_size=w * h))
    return Level(w, h, tuple(cells))


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects ``(criterion, passed, detail)`` rows for the end-of-run summary."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:>2}: {passed} {detail}")
