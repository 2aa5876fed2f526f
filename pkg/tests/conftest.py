import re
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from orbcover.formulations import CoverageData
from orbcover.scenario import TimeGrid

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


def columns(*cols, T=None):
    """V of shape (T, J, 1) from per-slot 0/1 columns."""
    arr = np.array(cols, dtype=bool).T
    return arr[:, :, None]


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def tiny_sclp_data():
    return CoverageData(columns([1, 0, 1], [0, 1, 0]), 1, 1)


@pytest.fixture
def tiny_revisit_data():
    return CoverageData(columns([1, 0, 0, 1], [1, 1, 0, 1]), 1, 1)


@pytest.fixture
def grid_factory():
    def make(num_steps=10, dt=60.0, gmst0_deg=0.0, cyclic=False):
        return TimeGrid(datetime(2025, 1, 1, 12, tzinfo=timezone.utc), dt, num_steps, cyclic, gmst0_deg)
    return make


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None:
        return
    lines = dict(mod.LINES)
    # a criterion whose fixture broke never reaches its own test body
    for rep in terminalreporter.stats.get("error", []):
        m = re.search(r"test_criterion_(\d+)_", getattr(rep, "nodeid", ""))
        if m and int(m.group(1)) not in lines:
            msg = str(getattr(rep, "longrepr", "")).strip().splitlines()
            lines[int(m.group(1))] = f"CRITERION {m.group(1)}: FAIL setup error: {msg[-1][:160] if msg else ''}"
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(lines):
        terminalreporter.write_line(lines[k])
