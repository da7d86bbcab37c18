"""Shared test rigs and the acceptance-criteria summary block.

The session-scoped fixtures build the standard NA 0.25 configuration (89
brightfield LEDs on the 4 mm / 79 mm array) once; most module tests reuse
it. Everything acceptance-specific lives in test_acceptance.py.
"""

import numpy as np
import pytest

from idtomo import (
    FrequencyGrid,
    LedArray,
    OpticalConfig,
    Pupil,
    select_brightfield,
)


@pytest.fixture(scope="session")
def cfg64():
    return OpticalConfig(wavelength_um=0.63, na=0.25, nx=64, ny=64, dx=0.5)


@pytest.fixture(scope="session")
def grid64(cfg64):
    return FrequencyGrid(cfg64)


@pytest.fixture(scope="session")
def pupil64(cfg64):
    return Pupil(cfg64)


@pytest.fixture(scope="session")
def illum89(cfg64):
    return select_brightfield(LedArray(), cfg64)


@pytest.fixture(scope="session")
def cfg32():
    return OpticalConfig(wavelength_um=0.63, na=0.25, nx=32, ny=32, dx=0.5)


@pytest.fixture(scope="session")
def grid32(cfg32):
    return FrequencyGrid(cfg32)


@pytest.fixture(scope="session")
def pupil32(cfg32):
    return Pupil(cfg32)


@pytest.fixture(scope="session")
def illum89_32(cfg32):
    return select_brightfield(LedArray(), cfg32)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)


# --- acceptance summary -----------------------------------------------------
# one PASS/FAIL line per acceptance criterion at the end of the run

_ACCEPTANCE: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call":
        _ACCEPTANCE[report.nodeid] = "PASS" if report.passed else "FAIL"
    elif report.failed:
        _ACCEPTANCE[report.nodeid] = "FAIL"
    elif report.when == "setup" and report.skipped:
        _ACCEPTANCE[report.nodeid] = "SKIP"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE):
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{_ACCEPTANCE[nodeid]:4s} {name}")
