"""Shared fixtures: the desk-scale construction is built once per session."""

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from frameforge.config import RunConfig

settings.register_profile("frameforge", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("frameforge")

ROOT = Path(__file__).resolve().parents[1]
DESK_CFG = ROOT / "configs" / "desk.cfg"


@pytest.fixture(scope="session")
def desk_config():
    return RunConfig.load(DESK_CFG)


@pytest.fixture(scope="session")
def desk_result(desk_config):
    from frameforge.pipeline import construct

    return construct(desk_config)


@pytest.fixture(scope="session")
def desk_frame(desk_result):
    from frameforge.frame import FrameSystem

    return FrameSystem(desk_result)


@pytest.fixture(scope="session")
def desk_tframe(desk_frame, desk_config):
    from frameforge.pipeline import translate_frame

    return translate_frame(desk_frame, desk_config)


@pytest.fixture(scope="session")
def default_grid():
    from frameforge.grid import build_grid

    return build_grid(32, 2**16)


@pytest.fixture(scope="session")
def cauchy_u(default_grid):
    from frameforge.grid import make_w0, weight_u

    return weight_u(make_w0("one", default_grid), default_grid)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per criterion; the lines are repeated in the terminal summary."""

    def record(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
