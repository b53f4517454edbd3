import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(20240611)


_ACCEPTANCE = []


@pytest.fixture
def acceptance(capsys):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def report(number, ok, detail):
        line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}: {detail}"
        _ACCEPTANCE.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
