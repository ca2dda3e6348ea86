import numpy as np
import pytest
from hypothesis import settings

from bubblescope.model import LpplsParams
from bubblescope.synthetic import SynthSpec, generate_lppls

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")

TRUTH = LpplsParams(tc=2008.5, m=0.5, omega=8.0, A=np.log(100) + 1.5, B=-0.6, C1=0.04, C2=0.03)


@pytest.fixture(scope="session")
def truth():
    return TRUTH


@pytest.fixture(scope="session")
def bubble(truth):
    """Noiseless 500-point bubble on [2004, 2008]."""
    return generate_lppls(SynthSpec(truth, np.linspace(2004, 2008, 500)))


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Records one acceptance outcome, then asserts it."""
    def check(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip()
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line
    return check


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
