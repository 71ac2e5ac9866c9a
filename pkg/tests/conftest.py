from __future__ import annotations

import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from strongapprox.groups import GroupSpec
from strongapprox.polynomial import RegularFunction

settings.register_profile("default", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"


@pytest.fixture(scope="session")
def sl2():
    return GroupSpec.sl2()


@pytest.fixture(scope="session")
def quat():
    return GroupSpec.quat(2, 3)


@pytest.fixture(scope="session")
def flagship_f():
    """F(pi(g)) for the ij-coefficient F and base point the identity."""
    return RegularFunction.from_dict({(1, 0, 1, 0): 2, (0, 1, 0, 1): -4}, "f")


@pytest.fixture(scope="session")
def flagship_config():
    return json.loads((CONFIGS / "flagship.json").read_text())


@pytest.fixture(scope="session")
def isotropic_config():
    return json.loads((CONFIGS / "isotropic.json").read_text())


@pytest.fixture(scope="session")
def flagship_certificate(flagship_config):
    from strongapprox.solver import solve

    return solve(flagship_config)


# -- acceptance summary: one line per criterion ------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed or rep.skipped):
        return
    n, text = mark.args
    ok = ACCEPTANCE.get(n, (True, text))[0] and rep.passed
    ACCEPTANCE[n] = (ok, text)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {text}")
