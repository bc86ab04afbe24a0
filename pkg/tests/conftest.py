import numpy as np
import pytest

from snowroad.imagecore import RgbImage

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def random_rgb(rng):
    def make(h=16, w=16):
        return RgbImage(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))

    return make


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
