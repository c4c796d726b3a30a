import os

import numpy as np
import pytest
from hypothesis import settings

from coupledcircle.density import GridDensity
from coupledcircle.maps import doubling, make_perturbed_linear

settings.register_profile("default", deadline=None, max_examples=40)
settings.register_profile("thorough", deadline=None, max_examples=400)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> (passed, summary); filled in by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance_record():
    def record(n, passed, summary):
        ACCEPTANCE[n] = (bool(passed), summary)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, summary = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {summary}")


@pytest.fixture(scope="session")
def T2():
    return doubling()


@pytest.fixture(scope="session")
def Tp():
    return make_perturbed_linear(2, 0.05)


def trig_values(x, a=0.0, b=0.0, k=1):
    return 1.0 + a * np.sin(2 * np.pi * k * x) + b * np.cos(2 * np.pi * k * x)


@pytest.fixture
def trig():
    return lambda M, a=0.0, b=0.0, k=1: GridDensity.trig(M, a, b, k)
