import numpy as np
import pytest

from idabounds.distributions import EmpiricalDataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_dataset(x, y, tag="source"):
    return EmpiricalDataset(np.asarray(x, dtype=float).reshape(len(y), -1), np.asarray(y), None, tag)


# one PASS/FAIL line per acceptance criterion, aggregated over its tests
_CRITERIA: dict[int, list[bool]] = {}


def _criterion_of(nodeid: str):
    name = nodeid.split("::")[-1]
    if "test_acceptance.py" not in nodeid or not name.startswith("test_criterion_"):
        return None
    return int(name[len("test_criterion_"):].split("_")[0])


def pytest_runtest_logreport(report):
    n = _criterion_of(report.nodeid)
    if n is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _CRITERIA.setdefault(n, []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok = all(_CRITERIA[n])
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}")
