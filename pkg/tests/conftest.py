import json
from pathlib import Path

import numpy as np
import pytest

from biparam.grid import build_product_grid, unit_rect

FIXTURES = Path(__file__).parent / "fixtures"
ACCEPTANCE_LINES: list[str] = []


def load_fixture(name: str) -> dict:
    return json.loads((FIXTURES / name).read_text())


@pytest.fixture
def grid_factory():
    def make(n1=1, n2=1, cells1=16, cells2=None, side1=1.0, side2=1.0):
        return build_product_grid(unit_rect(n1, n2, side1, side2), cells1, cells2 or cells1)

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
