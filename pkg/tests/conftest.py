"""Shared material cards plus the acceptance-line echo.

Two reference systems: a structural panel resin (percolated at 1%
filler) and the dog-bone coupon material used for the resistance
validation.  Acceptance tests append their `[accept NN]` lines to
`acceptance_lines`; the terminal-summary hook echoes them after the run.
"""

import pytest

from piezofrac.materials import preset

acceptance_lines = []


@pytest.fixture(scope="session")
def panel():
    return preset("mwcnt_epoxy")


@pytest.fixture(scope="session")
def dogbone():
    return preset("dwcnt_epoxy")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.line(line)
