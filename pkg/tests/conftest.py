import math

import pytest

from perbif.weights import Weight

PI = math.pi


def e00_weight() -> Weight:
    return Weight.indicators([(0.0, PI / 4, 1.0)], PI)


def bumps_even_weight() -> Weight:
    return Weight.indicators([(0.3, 0.5, 1.0), (PI - 0.5, PI - 0.3, 1.0)], PI)


def bumps_skew_weight() -> Weight:
    return Weight.indicators([(0.3, 0.5, 1.0), (PI - 0.5, PI - 0.3, 0.95)], PI)


@pytest.fixture
def e00():
    return e00_weight()


@pytest.fixture
def bumps_even():
    return bumps_even_weight()


@pytest.fixture
def bumps_skew():
    return bumps_skew_weight()


@pytest.fixture
def const1():
    return Weight.constant(1.0, PI)


_criteria: dict[str, list[bool]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    name = report.nodeid.split("::")[-1]
    if name.startswith("test_criterion_"):
        num = name.split("_")[2]
        _criteria.setdefault(num, []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        ok = all(_criteria[num])
        terminalreporter.write_line(f"criterion {int(num):2d}: {'PASS' if ok else 'FAIL'}")
