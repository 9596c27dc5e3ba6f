from __future__ import annotations

import pytest

from cascadekit import Config, TraceSet

from reference_trace import make_t3

# One line per acceptance criterion, printed after the run so the verdicts
# survive output capture.
_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    label = name.removeprefix("test_").replace("_", " ")
    if report.when == "call":
        _ACCEPTANCE_RESULTS.append((label, "PASS" if report.passed else "FAIL"))
    elif report.when == "setup" and (report.failed or report.skipped):
        _ACCEPTANCE_RESULTS.append((label, "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for label, verdict in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{label}: {verdict}")

@pytest.fixture
def t3() -> TraceSet:
    return make_t3()


@pytest.fixture
def c0() -> Config:
    return Config(lam=0.5, t1=(0.0, 0.25), t2=(0.8, 0.8))


@pytest.fixture
def c1() -> Config:
    return Config(lam=0.5, t1=(0.25, 0.35), t2=(0.8, 0.8))
