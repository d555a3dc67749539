import os

import pytest
from hypothesis import settings

from acceptance_report import LINES

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(LINES):
            terminalreporter.write_line(LINES[k])


@pytest.fixture
def small_cfg():
    from maopac.config import default_config

    return default_config(run={"steps": 40, "seeds": [1]})
