import numpy as np
import pytest

from cvbound.data import DgpConfig, generate_dgp


def pytest_configure(config):
    config._criterion_lines = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""
    lines = request.config._criterion_lines

    def record(cid: str, ok: bool, detail: str) -> None:
        line = f"criterion {cid:>4}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_sample():
    return generate_dgp(DgpConfig(n=60, p=8, beta_nonzero=(3.0, 4.0), seed=3))
