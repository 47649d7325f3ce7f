import sys

import numpy as np
import pytest

from garza.core import Design, IntervalDomain, PsiSystem
from garza.models import polynomial_model, rational_model


@pytest.fixture
def unit():
    return IntervalDomain(0.0, 1.0)


@pytest.fixture
def linear(unit):
    return polynomial_model(1, unit)


@pytest.fixture
def rational_below(unit):
    # Q = (x + 2)^2 normalised to Q(0) = 1
    return rational_model(1, 2, (1.0, 1.0, 0.25), unit)


@pytest.fixture
def rational_above(unit):
    # Q = (x - 3)^2 / 9
    return rational_model(1, 2, (1.0, -2.0 / 3.0, 1.0 / 9.0), unit)


@pytest.fixture
def base_design():
    return Design.create([0.0, 0.75], [0.5, 0.5])



def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
