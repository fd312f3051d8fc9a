import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=200, deadline=None)
settings.register_profile("ci", max_examples=1000, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance():
    """record(number, title, passed, detail) -> passed; lines are printed in the terminal summary."""
    def record(number, title, passed, detail=""):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}" + (f" ({detail})" if detail else ""))
        return passed
    return record


@pytest.fixture(scope="session")
def ref_site():
    from vegloss.geometry import reference_site
    return reference_site()


@pytest.fixture(scope="session")
def freqs():
    from vegloss.sounder import default_frequencies
    return default_frequencies()


@pytest.fixture(scope="session")
def free_space_cal(freqs):
    from vegloss.sounder import CalibrationScan, free_space_response
    return CalibrationScan(6e9, 1e6, free_space_response(freqs, 44.0), 44.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
