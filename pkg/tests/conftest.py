from __future__ import annotations

import math

import pytest

from deepspace_sim import antenna
from deepspace_sim.config import ArrayConfig, ScenarioConfig
from deepspace_sim.harness import array_model

LAM = 0.03


@pytest.fixture(scope="session")
def default_model():
    """Default reflectarray, broadside, unit design wavelength."""
    return array_model(ArrayConfig())


@pytest.fixture(scope="session")
def small_array():
    """A 400-cell aperture on a coarse grid for fast pattern checks."""
    geom = antenna.elliptical_aperture(400, LAM / 2)
    prof = antenna.steering_phase_profile(geom, 0.0, 0.0, 2 * math.pi / LAM)
    pat = antenna.radiation_pattern(geom, prof, antenna.GridSpec(360, 720))
    return geom, prof, pat


@pytest.fixture
def fast_config():
    """Small array and grid so full harness runs take well under a second."""
    return ScenarioConfig(array=ArrayConfig(n_cells=400, n_theta=180, n_phi=360),
                          n_samples=20)


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one result line per acceptance criterion."""
    def record(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
        print(ACCEPTANCE_LINES[number])
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
