import re

import pytest

from pulsefront.homowave import wave_family
from pulsefront.medium import make_a4_medium, make_cubic_medium, sinusoidal_b

_ACCEPT = {}
_NAME = re.compile(r"test_c(\d+)_")


@pytest.fixture(scope="session")
def homogeneous():
    return make_cubic_medium(1.0, 0.25)


@pytest.fixture(scope="session")
def sinusoidal():
    return make_cubic_medium(1.0, sinusoidal_b())


@pytest.fixture(scope="session")
def a4():
    return make_a4_medium(0.35, 0.02, 0.1)


@pytest.fixture(scope="session")
def a4_waves(a4):
    return wave_family(a4, n_y=16)


def pytest_runtest_logreport(report):
    m = _NAME.search(report.nodeid)
    if m is None or "test_acceptance" not in report.nodeid:
        return
    n = int(m.group(1))
    if report.when == "call" or (report.when == "setup" and report.failed):
        detail = dict(report.user_properties).get("detail", "")
        if report.failed and not detail:
            detail = report.longrepr.reprcrash.message if hasattr(report.longrepr, "reprcrash") else "error"
        _ACCEPT[n] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPT:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPT):
        status, detail = _ACCEPT[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}")
