"""Shared fixtures and the acceptance summary printed at the end of a run."""

import numpy as np
import pytest

from fnls_lab import GridSpec, SpectralField

ACCEPTANCE: dict = {}


@pytest.fixture
def record_criterion():
    """Record ``(number, name, passed, detail)`` for the end-of-run summary."""

    def record(number: int, name: str, passed: bool, detail: str = ""):
        ACCEPTANCE[number] = (name, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        name, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {k:>2}. {name}: {detail}")


def random_field(grid: GridSpec, rng, scale: float = 1.0) -> SpectralField:
    c = rng.standard_normal(grid.modes) + 1j * rng.standard_normal(grid.modes)
    return SpectralField(grid, scale * c).truncate()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
