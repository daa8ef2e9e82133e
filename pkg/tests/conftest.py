import math

import pytest
from hypothesis import HealthCheck, settings

from rissop.channel import SystemConfig

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

UNIT_DISTANCES = {"SR": 1.0, "JR": 1.0, "RD": 1.0, "RE": 1.0}


@pytest.fixture
def default_cfg():
    return SystemConfig()


def unit_config(**changes):
    """Every path gain equal to one and Gamma_0 = 1 unless overridden."""
    base = SystemConfig(n_elements=1, gamma0_db=0.0, pathloss_ref_db=0.0,
                        distances=dict(UNIT_DISTANCES))
    return base.replace(**changes) if changes else base


def rel_err(a, b):
    return abs(a - b) / abs(b)


def fig1_grid():
    return [(n, float(g)) for n in (16, 32, 64) for g in range(0, 61, 2)]


def isclose(a, b, rel):
    return math.isclose(a, b, rel_tol=rel)


ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
