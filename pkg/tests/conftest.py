import os

import numpy as np
import pytest

from umac.ldpc.design import DegreeDistribution
from umac.ldpc.peg import peg_construct
from umac.phy import SystemParams, generate_dictionary

# output of optimize_degree_distribution(88/357, 6, seed=1) with default search
# settings; frozen here so fixtures do not pay the ~20 s search
_L2, _L3, _L4 = 0.4512308849378718, 0.21648491917381785, 0.00034791002547593765
PAPER_DIST = DegreeDistribution({2: _L2, 3: _L3, 4: _L4, 6: 1.0 - _L2 - _L3 - _L4},
                                {3: 0.19352074651405315, 4: 0.8064792534859468})


def pytest_addoption(parser):
    parser.addoption("--run-expensive", action="store_true", default=False,
                     help="run the hours-long acceptance tier")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-expensive") or os.environ.get("UMAC_EXPENSIVE") == "1":
        return
    skip = pytest.mark.skip(reason="expensive tier; pass --run-expensive or set UMAC_EXPENSIVE=1")
    for item in items:
        if "expensive" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def paper_params():
    return SystemParams()


@pytest.fixture(scope="session")
def paper_code():
    return peg_construct(PAPER_DIST, 357, 88, seed=1)


@pytest.fixture(scope="session")
def paper_dictionary(paper_params):
    p = paper_params
    return generate_dictionary(p.n_p, p.bp, p.column_energy, seed=0)


@pytest.fixture(scope="session")
def small_code():
    return peg_construct(DegreeDistribution.regular(3, 6), 64, 32, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed after the run whatever the capture mode
ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
