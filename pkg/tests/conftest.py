import itertools

import numpy as np
import pytest

from hofa.space import ProductSpace


@pytest.fixture
def f2x2():
    return ProductSpace(2, (1, 1))


def brute_points(p, n):
    return [np.array(x) for x in itertools.product(range(p), repeat=n)]


ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
