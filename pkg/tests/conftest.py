import math

import pytest

from rfwpt.channel import PropagationContext
from rfwpt.geometry import ArraySpec, EulerAngles, build_planar_array, relative_to_anchor

PITCH = 0.0282
FREQ = 5.8e9


@pytest.fixture
def ctx():
    return PropagationContext(FREQ)


@pytest.fixture
def tx8():
    return build_planar_array(ArraySpec(8, 8, PITCH, PITCH, per_element_power=0.1))


@pytest.fixture
def tx4():
    return build_planar_array(ArraySpec(4, 4, PITCH, PITCH, per_element_power=0.1))


@pytest.fixture
def rx4():
    return relative_to_anchor(build_planar_array(ArraySpec(4, 4, PITCH, PITCH)))


@pytest.fixture
def facing():
    """Receiver attitude looking back at the transmitter."""
    return EulerAngles(0.0, math.pi, 0.0)


_acceptance_lines = []


def record_acceptance(line: str):
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
