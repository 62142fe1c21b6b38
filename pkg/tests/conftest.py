import pytest

from peakwave.continuation import ContinuationConfig, continue_branch

_BRANCHES = {}


def get_branch(r, k=1, floor=1e-3):
    """Continuation runs are shared across test modules."""
    key = (float(r), int(k), float(floor))
    if key not in _BRANCHES:
        _BRANCHES[key] = continue_branch(r, k, ContinuationConfig(height_floor=floor))
    return _BRANCHES[key]


@pytest.fixture(scope="session")
def branch():
    return get_branch


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        _ACCEPTANCE[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        num = int(name.split("_")[2])
        verdict = "PASS" if _ACCEPTANCE[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {verdict}  ({name})")
