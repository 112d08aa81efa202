import numpy as np
import pytest

from brownmeasure import measures, ovcauchy


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def semicircle_model():
    return ovcauchy.selfadjoint(measures.semicircle(2.0))


# one summary line per acceptance criterion, shown at the end of the run
_CRITERIA = {}


@pytest.fixture
def criterion():
    def record(number, ok, detail):
        _CRITERIA[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[key])
